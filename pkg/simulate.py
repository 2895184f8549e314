"""
Benchmark runner for the well-balanced shallow water schemes.

    python simulate.py run --case a --scheme moving --cells 100 --out results/a.csv
    python simulate.py sweep --study convergence
"""

import sys
import logging

from swsolver.main import main

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)


if __name__ == "__main__":
    sys.exit(main())
