# Run reports - console tables and the summary.json / table.csv / stress.csv files
from pathlib import Path
from typing import Dict, List

import pandas as pd
from colorama import Fore, Style

from afnet.evaluation import CvSummary
from afnet.experiment import StressResult
from afnet.gradcheck import ActivationCheck, ModelCheck
from afnet.metrics import METRIC_LABELS, METRIC_NAMES
from tools.atomic_io import write_json_atomic, write_text_atomic

SUMMARY_FILE = "summary.json"
TABLE_FILE = "table.csv"
STRESS_FILE = "stress.csv"
STRESS_COLUMNS = ["epoch", "activation", "dead_units"]


def table_frame(summary: CvSummary) -> pd.DataFrame:
    """Metric rows x activation columns, mean values as percentages"""
    rows = []
    for metric in METRIC_NAMES:
        row = {"dataset": summary.dataset, "metric": METRIC_LABELS[metric]}
        for activation in summary.activations:
            row[activation] = f"{100 * summary.mean(activation, metric):.2f}"
        rows.append(row)
    return pd.DataFrame(rows, columns=["dataset", "metric"] + list(summary.activations))


def table_csv(summary: CvSummary) -> str:
    return table_frame(summary).to_csv(index=False, lineterminator="\n")


def stress_csv(result: StressResult) -> str:
    frame = pd.DataFrame(result.rows(), columns=STRESS_COLUMNS)
    return frame.to_csv(index=False, lineterminator="\n")


def write_run_outputs(summary: CvSummary, output_dir) -> Dict[str, Path]:
    output_dir = Path(output_dir)
    return {
        "summary": write_json_atomic(output_dir / SUMMARY_FILE, summary.to_dict()),
        "table": write_text_atomic(output_dir / TABLE_FILE, table_csv(summary)),
    }


def write_stress_outputs(result: StressResult, output_dir) -> Path:
    return write_text_atomic(Path(output_dir) / STRESS_FILE, stress_csv(result))


def print_cv_report(summary: CvSummary):
    """Comparison table with the best mean of every row highlighted"""
    best = summary.best_by_metric()
    width = max(len(label) for label in METRIC_LABELS.values()) + 2

    print("\n" + "=" * 80)
    print(f"{Fore.CYAN}📊 ACTIVATION COMPARISON - {summary.dataset}{Style.RESET_ALL}")
    print("=" * 80)
    print(
        f"  {summary.k}-fold cross-validation x {summary.repeats} repeats, "
        f"{len(summary.reports)} runs, base seed {summary.base_seed}\n"
    )

    header = "".join(f"{name:>16}" for name in summary.activations)
    print(f"  {'Metric':<{width}}{header}")
    for metric in METRIC_NAMES:
        cells = []
        for activation in summary.activations:
            stats = summary.stats[activation][metric]
            text = f"{100 * stats['mean']:.2f} ±{100 * stats['std']:.2f}"
            if activation == best[metric]:
                cells.append(f"{Fore.GREEN}{Style.BRIGHT}{text:>16}{Style.RESET_ALL}")
            else:
                cells.append(f"{text:>16}")
        print(f"  {METRIC_LABELS[metric]:<{width}}{''.join(cells)}")

    print("\n" + "=" * 80 + "\n")


def print_gradcheck_report(activation_checks: List[ActivationCheck], model_checks: List[ModelCheck]):
    print("\n" + "=" * 80)
    print(f"{Fore.CYAN}🔬 GRADIENT CHECK{Style.RESET_ALL}")
    print("=" * 80)

    print(f"\n{Fore.CYAN}📋 ACTIVATIONS{Style.RESET_ALL}")
    for check in activation_checks:
        icon = f"{Fore.GREEN}✓{Style.RESET_ALL}" if check.passed else f"{Fore.RED}✗{Style.RESET_ALL}"
        print(
            f"  {icon} {check.activation:<8} {check.trials} points, "
            f"max rel error {check.max_rel_error:.3e} (tol {check.tolerance:.0e})"
        )

    print(f"\n{Fore.CYAN}📋 MODELS{Style.RESET_ALL}")
    for check in model_checks:
        icon = f"{Fore.GREEN}✓{Style.RESET_ALL}" if check.passed else f"{Fore.RED}✗{Style.RESET_ALL}"
        print(
            f"  {icon} {check.name:<20} {check.n_checked}/{check.n_params} params, "
            f"max rel error {check.max_rel_error:.3e}, excluded {check.n_excluded}"
        )
        for failure in check.failures[:5]:
            print(f"      {Fore.RED}→ {failure}{Style.RESET_ALL}")
        if len(check.failures) > 5:
            print(f"      {Fore.RED}→ ... and {len(check.failures) - 5} more{Style.RESET_ALL}")

    print("\n" + "=" * 80 + "\n")


def print_stress_report(result: StressResult):
    print("\n" + "=" * 80)
    print(
        f"{Fore.CYAN}💀 DEAD UNITS PER EPOCH - {result.dataset} "
        f"(bias_init={result.bias_init:g}){Style.RESET_ALL}"
    )
    print("=" * 80)
    for name, counts in result.series.items():
        colour = Fore.GREEN if not any(counts) else Fore.RED
        print(f"  {colour}{name:<8}{Style.RESET_ALL} {' '.join(str(c) for c in counts)}")
    print("\n" + "=" * 80 + "\n")
