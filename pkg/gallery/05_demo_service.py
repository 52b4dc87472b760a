"""Drive the interactive demo-collection service headlessly.

Starts the WebSocket service in-process, plays one Stick Button session
through the same protocol the browser client uses, saves the recording,
and shows that it loads back as a valid demonstration.

Run:  python gallery/05_demo_service.py
"""

import tempfile
import threading
from pathlib import Path

from skillplan.demo_bridge.client import BridgeClient
from skillplan.demo_bridge.server import make_server
from skillplan.envs import get_env
from skillplan.envs.demos_io import load_demos
from skillplan.preprocess import partition, segment_corpus

out = Path(tempfile.mkdtemp(prefix="skillplan-bridge-")) / "human_demos.jsonl"
server = make_server(port=0, out_path=out, seed_base=400)
port = server.server_address[1]
threading.Thread(target=server.serve_forever, daemon=True).start()
print(f"demo service listening on 127.0.0.1:{port}")

env = get_env("stick_button")

with BridgeClient("127.0.0.1", port) as client:
    snapshot = client.start(seed=1)
    print("session", snapshot["session"], "goal:", snapshot["goal"])
    print("atoms:", snapshot["atoms"])

    # A human clicks; here the scripted demonstrator supplies the actions
    # through the same raw-action channel used for automated testing.
    demo = env.scripted_policy(env.sample_task(401, "train"))
    for u in demo.actions:
        snapshot = client.action([float(v) for v in u.values])
        if snapshot["status"] == "done":
            break
    print(f"status after {snapshot['steps']} steps:", snapshot["status"])
    print("saved:", client.finish("save")["saved"])

server.shutdown()

# The recording is a standard demos file: replay-verified on load, and the
# preprocessing pipeline consumes it unmodified.
demos = load_demos(out, env, verify=True)
segments = segment_corpus(demos, env.predicates)
print(f"loaded {len(demos)} recorded demo(s); {len(segments)} segments; "
      f"{len(partition(segments))} skill datasets")
