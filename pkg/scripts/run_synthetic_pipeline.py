"""Run the full pipeline on freshly generated synthetic data.

    python3 scripts/run_synthetic_pipeline.py --out out/synthetic --seed 0
"""
import argparse
import logging
from dataclasses import replace

from collabnet.pipeline import PipelineConfig
from collabnet.workflow import run_pipeline


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/synthetic")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--nodes", type=int, default=60)
    ap.add_argument("--config", help="optional pipeline.json")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    cfg = replace(cfg, seed=args.seed, n_nodes=args.nodes)
    result = run_pipeline(cfg, args.out)
    print(f"{len(result['files'])} files in {result['out_dir']}")
    for note in result["notices"]:
        print(note)


if __name__ == "__main__":
    main()
