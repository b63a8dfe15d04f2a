"""``pumpstudy`` command line.

    pumpstudy classify|study|regress|synth|report --config FILE [--out DIR] ...

The config file is a flat ``key = value`` list mirroring the long flags;
flags given on the command line win.  Relative paths in a config file are
resolved against the file's directory.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields, replace
from pathlib import Path

from .errors import PumpStudyError
from .eventstudy import WindowSet
from .pipeline import COMMANDS, EXIT_DATA, RunConfig
from .regression import POLICIES
from .timeseries import RelativeWindow

PATH_KEYS = {"out", "data_dir", "events_file", "klines_dir", "tweets_dir"}
BOOL_KEYS = {"robust_se", "all_events"}
INT_KEYS = {"threshold_rank", "workers", "seed"}
WINDOW_NAMES = {f.name for f in fields(WindowSet)}


def _truthy(text: str) -> bool:
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off", ""):
        return False
    raise PumpStudyError(f"not a boolean: {text!r}")


def read_config_file(path) -> dict[str, str]:
    path = Path(path)
    out = {}
    for n, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise PumpStudyError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key in PATH_KEYS and value and not Path(value).is_absolute():
            value = str(path.parent / value)
        out[key] = value
    return out


def build_config(settings: dict[str, str]) -> RunConfig:
    cfg = RunConfig()
    windows = {}
    synth_params = {}
    for key, value in settings.items():
        if key.startswith("window."):
            name = key.split(".", 1)[1]
            if name not in WINDOW_NAMES:
                raise PumpStudyError(f"unknown window {name!r}")
            a, b = (int(v) for v in value.split(","))
            windows[name] = RelativeWindow(a, b)
        elif key.startswith("synth."):
            synth_params[key.split(".", 1)[1]] = value
        elif key in PATH_KEYS:
            cfg = replace(cfg, **{key: Path(value)})
        elif key in BOOL_KEYS:
            cfg = replace(cfg, **{key: _truthy(value)})
        elif key in INT_KEYS:
            cfg = replace(cfg, **{key: int(value)})
        elif key == "standardize_policy":
            if value not in POLICIES:
                raise PumpStudyError(f"standardize_policy must be one of {', '.join(POLICIES)}")
            cfg = replace(cfg, standardize_policy=value)
        else:
            raise PumpStudyError(f"unknown config key {key!r}")
    if windows:
        cfg = replace(cfg, windows=WindowSet(**windows))
    if synth_params:
        cfg = replace(cfg, synth=synth_params)
    if cfg.threshold_rank < 1:
        raise PumpStudyError("threshold_rank must be >= 1")
    if cfg.workers < 1:
        raise PumpStudyError("workers must be >= 1")
    return cfg


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pumpstudy", description="Pump-and-dump event study pipeline.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", type=Path, help="key = value config file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--data", dest="data_dir", help="corpus directory (events.csv, klines/, tweets/)")
    p.add_argument("--events", dest="events_file")
    p.add_argument("--klines", dest="klines_dir")
    p.add_argument("--tweets", dest="tweets_dir")
    p.add_argument("--threshold-rank", type=int)
    p.add_argument("--standardize-policy", choices=POLICIES)
    p.add_argument("--robust-se", action="store_true", default=None)
    p.add_argument("--workers", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--all-events", action="store_true", default=None)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="extra config entry, e.g. synth.n_events=50 or window.pump=-1,1")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        settings = read_config_file(args.config) if args.config else {}
        for item in args.set:
            if "=" not in item:
                raise PumpStudyError(f"--set expects KEY=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            settings[k.strip().replace("-", "_")] = v.strip()
        for key in ("out", "data_dir", "events_file", "klines_dir", "tweets_dir",
                    "threshold_rank", "standardize_policy", "workers", "seed"):
            value = getattr(args, key)
            if value is not None:
                settings[key] = str(value)
        for key in ("robust_se", "all_events"):
            if getattr(args, key):
                settings[key] = "true"
        cfg = build_config(settings)
        return COMMANDS[args.command](cfg)
    except (PumpStudyError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
