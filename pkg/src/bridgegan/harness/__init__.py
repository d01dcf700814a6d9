from .benchmark import ArchResult, BenchmarkResult, run_benchmark, write_benchmark
from .config import ExperimentConfig, derive_seed, paper_scale, read_jsonl
from .generate import INVALID, SCORE_HEADER, generate_cmd
from .report import report, top_fraction_ids
from .search import FAILED_SECONDS, run_search, summarize_search
from .stats import DegenerateSample, GroupComparison, compare_groups, fold_change, pearson_r
from .train_cmd import train_cmd
