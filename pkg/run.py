"""
통합 실행 스크립트
Usage: python run.py <mine|ground|train|eval|pipeline|synth|sweep> [options]
"""
import sys

from cli.main import main

if __name__ == "__main__":
    sys.exit(main())
