"""Scripted stand-in for a compiler.

Usage: fakecc.py SCRIPT.json [options...] -o OUT INPUT

The script picks an action per invocation.  Rules are tried in order:
"rules" entries (match on options and/or file name), then "files" (by
name), then "markers" (substring of the input), then "default".

Actions: accept, reject, abort, ice, sleep, noartifact.
"""

import json
import os
import sys
import time


def main(argv):
    script = json.loads(open(argv[0]).read())
    args = argv[1:]
    out = args[args.index("-o") + 1]
    src = args[-1]
    opts = set(args[:args.index("-o")])
    name = os.path.basename(src)
    text = open(src, encoding="utf-8", errors="replace").read()

    action = None
    for rule in script.get("rules", []):
        if "file" in rule and rule["file"] != name:
            continue
        if not set(rule.get("when", [])) <= opts:
            continue
        action = rule["action"]
        break
    if action is None:
        action = script.get("files", {}).get(name)
    if action is None:
        for marker, act in script.get("markers", {}).items():
            if marker in text:
                action = act
                break
    if action is None:
        action = script.get("default", "accept")

    if action == "accept":
        with open(out, "w") as f:
            f.write("object\n")
        return 0
    if action == "noartifact":
        return 0
    if action == "reject":
        sys.stderr.write(f"{name}:1:1: error: expected ';'\n")
        return 1
    if action == "ice":
        sys.stderr.write(f"{name}: internal compiler error: in fold, at fold.c:42\n")
        return 1
    if action == "abort":
        sys.stderr.flush()
        os.abort()
    if action == "sleep":
        time.sleep(float(script.get("sleep", 30)))
        return 0
    sys.stderr.write(f"fakecc: unknown action {action}\n")
    return 2


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
