#!/usr/bin/env python3
"""Drive the loop through the HTTP labeling service.

The loop publishes each selected batch at GET /api/queries and blocks until
every instance receives a label via POST /api/labels; progress is visible at
GET /api/status. A browser console (see frontend/) can serve as the
annotator; this demo scripts one instead so it runs unattended.

To label by hand, run the CLI with the console's built assets:

    adma run --manifest <m> --source <s> --oracle http \\
             --bind 127.0.0.1:8765 --static frontend/dist --out results/

and open http://127.0.0.1:8765/ in a browser.
"""

import json
import threading
import time
import urllib.request
from pathlib import Path

from adma import StrategyConfig, SyntheticConfig, generate_synthetic_task, run
from adma.server import serve_interactive_oracle

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

dataset, snapshot = generate_synthetic_task(
    SyntheticConfig(K_source=5, K_target=3, n_per_class_target=30), seed=2
)

oracle, server = serve_interactive_oracle(
    "127.0.0.1:0", K_target=dataset.K_target, class_names=dataset.class_names
)
host, port = server.server_address
base = f"http://{host}:{port}"
print(f"labeling service at {base}  (endpoints under /api/)")


def get(path):
    with urllib.request.urlopen(base + path, timeout=5) as resp:
        return json.loads(resp.read())


def post_label(instance_id, label):
    req = urllib.request.Request(
        base + "/api/labels",
        data=json.dumps({"instance_id": instance_id, "label": label}).encode(),
        headers={"Content-Type": "application/json"},
        method="POST",
    )
    with urllib.request.urlopen(req, timeout=5) as resp:
        return resp.status, json.loads(resp.read())


def scripted_annotator():
    """Poll for pending queries and answer each with class 0."""
    done = 0
    while done < 9:
        pending = get("/api/queries")["pending"]
        for card in pending:
            status, body = post_label(card["instance_id"], 0)
            print(f"  annotator: labeled #{card['instance_id']} -> 0 "
                  f"(HTTP {status}, ref {card['item_ref']})")
            done += 1
        time.sleep(0.05)


annotator = threading.Thread(target=scripted_annotator, daemon=True)
annotator.start()

config = StrategyConfig(batch_size=3, budget=9, seed=2, test_fraction=0.25)
state, curve = run(dataset, snapshot, config, oracle=oracle,
                   out_dir=OUT / "interactive_run")
server.shutdown()

print(f"\nloop finished: {state.queried} labels over {state.t} iterations")
print(f"status endpoint last reported: {json.dumps(oracle.status_payload())[:120]}...")
print(f"checkpoint + CSVs in {OUT / 'interactive_run'}")
