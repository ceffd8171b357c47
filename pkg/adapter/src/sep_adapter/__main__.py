"""Entry point: python -m sep_adapter --transform identity|gain|denoise."""

import argparse
import sys

from . import serve
from .transforms import build_transform


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sep_adapter", description=__doc__)
    parser.add_argument("--transform", default="identity", choices=["identity", "gain", "denoise"])
    parser.add_argument("--gain", type=float, default=0.5)
    parser.add_argument("--strength", type=float, default=0.5)
    args = parser.parse_args(argv)
    transform = build_transform(args.transform, gain=args.gain, strength=args.strength)
    return serve(transform)


if __name__ == "__main__":
    sys.exit(main())
