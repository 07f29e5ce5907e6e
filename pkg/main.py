"""rce-lab 실행 진입점

사용 예:
    python main.py gen-env --kind chain --len 2 -o env.json
    python main.py verify --suite lemma2 --seeds 0..99
"""
import os
import sys
sys.path.append(os.path.abspath(os.path.dirname(__file__)))

from harness.cli import cli_dispatch


if __name__ == "__main__":
    sys.exit(cli_dispatch())
