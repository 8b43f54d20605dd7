#!/usr/bin/env python3
"""
swarmcoord
==========
Simulate and model-check swarm coordination scenarios (foraging and
flocking) over tuple spaces, virtual stigmergy, message passing and
ISPL interpreted systems.

Usage:
    python main.py {sim,check,estimate,parse,stats,step} [options]

Example:
    python main.py check --config configs/flocking_ispl_2robots.json
    python main.py sim --config configs/flocking_voter.json --seed 3
    python main.py parse --ispl models/flocking_2robots.ispl

Run ``python main.py --help`` for every option.
"""

import sys

from swarmcoord.cli import main


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\n[!] Interrupted by user")
        sys.exit(1)
    except Exception as e:
        print(f"\n[!] Error: {e}")
        import traceback
        traceback.print_exc()
        sys.exit(1)
