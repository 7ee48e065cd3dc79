"""Run management and execution."""
import json
import time
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from .config import Config, RunConfig
from .errors import SuperSinhError
from .utils import resolve_path, write_json

Handler = Callable[[RunConfig], Tuple[int, Dict[str, Any]]]


class CommandRun:
    """Executes one command for a run configuration and records its report.

    Reports are written to ``<results_dir>/<run_id>_<command>.json`` and every
    execution appends a summary line to ``runs_log.jsonl``.
    """

    def __init__(
        self,
        run: RunConfig,
        handler: Handler,
        config: Optional[Config] = None,
        results_dir: Optional[Path] = None
    ):
        """Initialize the run with its configuration and command handler."""
        self.config = config or Config()
        self.run = run
        self.handler = handler
        self.run_id = run.run_id

        self.results_dir = Path(results_dir) if results_dir else resolve_path(self.config.results_dir)
        self.results_dir.mkdir(parents=True, exist_ok=True)

    def _get_report_file(self) -> Path:
        """Get the file path for this run's report."""
        return self.results_dir / f"{self.run_id}_{self.run.command}.json"

    def _save_report(self, report: Dict[str, Any], exit_code: int, duration: float) -> Path:
        """Save the command report together with the run configuration."""
        result_data = {
            'run_id': self.run_id,
            'command': self.run.command,
            'timestamp': datetime.now().isoformat(),
            'exit_code': exit_code,
            'duration_seconds': duration,
            'run_config': self.run.to_dict(),
            'report': report
        }
        return write_json(self._get_report_file(), result_data)

    def _log_run(self, exit_code: int, duration: float):
        """Log run metadata to runs_log.jsonl."""
        log_file = self.results_dir / "runs_log.jsonl"
        summary = {
            'run_id': self.run_id,
            'command': self.run.command,
            'subalgebra': self.run.subalgebra,
            'timestamp': datetime.now().isoformat(),
            'exit_code': exit_code,
            'duration_seconds': round(duration, 3)
        }
        with open(log_file, 'a', encoding='utf-8') as f:
            f.write(json.dumps(summary) + '\n')

    def execute(self) -> Tuple[int, Dict[str, Any]]:
        """Run the handler; library errors become an error report and an exit code."""
        print(f"\n{'='*60}")
        print(f"Run {self.run_id[:12]}: {self.run.command}")
        print(f"{'='*60}")
        print(f"  Subalgebra: {self.run.subalgebra} (eps = {self.run.epsilon:+d})")
        print(f"  Timestamp: {datetime.now().isoformat()}")

        start = time.time()
        try:
            exit_code, report = self.handler(self.run)
        except SuperSinhError as e:
            print(f"  ✗ {type(e).__name__}: {e}")
            exit_code = e.exit_code
            report = {'error': {'type': type(e).__name__, 'message': str(e), 'exit_code': e.exit_code}}
        duration = time.time() - start

        report_file = self._save_report(report, exit_code, duration)
        self._log_run(exit_code, duration)

        marker = "✓" if exit_code == 0 else "✗"
        print(f"\n{'='*60}")
        print(f"{marker} {self.run.command} finished with exit code {exit_code} in {duration:.2f}s")
        print(f"  Report: {report_file}")
        print(f"{'='*60}\n")
        return exit_code, report


def read_run_log(results_dir: Path) -> List[Dict[str, Any]]:
    """Parse runs_log.jsonl, skipping blank and malformed lines."""
    log_file = Path(results_dir) / "runs_log.jsonl"
    if not log_file.exists():
        return []
    entries = []
    with open(log_file, 'r', encoding='utf-8') as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            try:
                entries.append(json.loads(line))
            except json.JSONDecodeError:
                continue
    return entries
