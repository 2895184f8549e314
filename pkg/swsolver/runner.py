import logging
import time
from pathlib import Path
from typing import List, Optional, Sequence

from tabulate import tabulate

from .config import RunConfig, SCHEMES
from .harness import RunResult, convergence_study, figure_sweep, run_case, wellbalance_sweep

logger = logging.getLogger(__name__)

# reference grid and time-step exponent per scheme for the convergence sweep
CONVERGENCE_SETTINGS = {
    'still': {'reference_cells': 3200, 'dx_power': 5.0 / 3.0},
    'moving': {'reference_cells': 3200, 'dx_power': 5.0 / 3.0},
    'oracle1': {'reference_cells': 3200, 'dx_power': 1.0},
}


class RunnerCLI:
    """Command handlers behind `simulate.py`; one method per subcommand."""

    def __init__(self, progress: bool = True):
        self.progress = progress
        self.results: List[RunResult] = []
        self.started = time.perf_counter()

    def close(self):
        elapsed = time.perf_counter() - self.started
        logger.info(f"Finished {len(self.results)} run(s) in {elapsed:.1f}s")

    def run(self, config: RunConfig):

        config.validate()
        print(f"🌊 Case {config.case} | scheme {config.scheme} | N={config.n_cells} | "
              f"amplitude {config.amplitude}")

        result = run_case(config, progress=self.progress)
        self.results.append(result)

        report, log = result.report, result.log
        rows = [
            {'Metric': 'steps', 'Value': log.steps},
            {'Metric': 't_final', 'Value': f"{log.t_final:.6g}"},
            {'Metric': 'min depth', 'Value': f"{log.min_depth:.6g}"},
            {'Metric': 'max |dh| outside pulse', 'Value': f"{report.spurious:.3e}"},
            {'Metric': 'max |dm| outside pulse', 'Value': f"{report.spurious_momentum:.3e}"},
            {'Metric': 'L1(dh)', 'Value': f"{report.l1_h:.3e}"},
            {'Metric': 'L1(dm)', 'Value': f"{report.l1_m:.3e}"},
            {'Metric': 'mass defect', 'Value': f"{log.mass_defect:.3e}"},
        ]
        rows += [{'Metric': key, 'Value': value} for key, value in result.diagnostics.items()]
        print(tabulate(rows, headers='keys', tablefmt='grid'))

        fallbacks = sum(v for k, v in result.diagnostics.items() if k != 'rhs_evaluations')
        if fallbacks:
            print(f"⚠️  {fallbacks} solver fallback(s) fired, see the log for details")

        for path in result.paths:
            print(f"💾 Wrote {path}")
        return result

    def sweep_wellbalance(self, n_list: Sequence[int] = (50, 100)):

        print("⚖️  Evaluating scheme residuals on the unperturbed backgrounds")
        frame = wellbalance_sweep(n_list=n_list, progress=self.progress)
        print(tabulate(frame, headers='keys', tablefmt='grid', showindex=False, floatfmt='.3e'))
        return frame

    def sweep_convergence(self, schemes: Sequence[str] = SCHEMES, out_dir: Optional[str] = None):

        tables = {}
        for scheme_name in schemes:
            print(f"\n📈 Self-convergence of the {scheme_name} scheme")
            frame = convergence_study(scheme_name=scheme_name, progress=self.progress,
                                      **CONVERGENCE_SETTINGS[scheme_name])
            print(tabulate(frame, headers='keys', tablefmt='grid', showindex=False, floatfmt='.4g'))
            print(f"📊 Fitted order: {frame.attrs['order']:.2f}")
            tables[scheme_name] = frame

            if out_dir:
                path = Path(out_dir) / f"convergence_{scheme_name}.csv"
                path.parent.mkdir(parents=True, exist_ok=True)
                frame.to_csv(path, index=False, float_format='%.17g')
                print(f"💾 Wrote {path}")
        return tables

    def sweep_figures(self, out_dir: str = 'results'):

        print(f"🖼️  Running the figure configurations into {out_dir}/")
        frame = figure_sweep(out_dir, progress=self.progress)
        shown = frame.drop(columns=['file'])
        print(tabulate(shown, headers='keys', tablefmt='grid', showindex=False, floatfmt='.3e'))
        print(f"\n📊 Total runs: {len(frame)}")
        return frame
