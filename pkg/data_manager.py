import json
import logging
import os
from datetime import datetime

import pandas as pd

from experiment import RESULTS_DIR, ExperimentResult, __version__

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.9g"
INDEX_FILE = "experiment_runs.json"


def trials_path(output_path: str) -> str:
    stem, _ = os.path.splitext(output_path)
    return f"{stem}_trials.csv"


def header_lines(result: ExperimentResult) -> list:
    spec = result.spec
    lines = [
        f"# generator: amop-bench {__version__}",
        f"# kind: {spec.kind}",
        f"# base_seed: {spec.base_seed}",
        f"# spec: {json.dumps(spec.to_dict(), sort_keys=True, separators=(',', ':'))}",
    ]
    for key, value in sorted(result.metadata.items()):
        lines.append(f"# {key}: {value}")
    return lines


def write_table(path: str, table: pd.DataFrame, header: list):
    """CSV with a '#' comment block, LF line endings and 9 significant digits."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    body = table.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    with open(path, "w", newline="\n") as f:
        for line in header:
            f.write(line + "\n")
        f.write(body)


def read_table(path: str) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def read_header(path: str) -> dict:
    """The '# key: value' comment block of a result CSV; the spec entry is decoded."""
    header = {}
    with open(path, "r") as f:
        for line in f:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition(": ")
            header[key] = value
    if "spec" in header:
        header["spec"] = json.loads(header["spec"])
    return header


class ResultsManager:
    """Index of finished experiment runs, keyed by spec name then kind."""

    def __init__(self, results_dir: str = RESULTS_DIR):
        self.results_dir = results_dir
        self.data_file = os.path.join(results_dir, INDEX_FILE)
        self.load_data()

    def load_data(self):
        if os.path.exists(self.data_file):
            with open(self.data_file, "r") as f:
                self.data = json.load(f)
        else:
            self.data = {}

    def save_data(self):
        os.makedirs(self.results_dir, exist_ok=True)
        with open(self.data_file, "w") as f:
            json.dump(self.data, f, indent=4)

    def resolve_output(self, output: str) -> str:
        return output if os.path.isabs(output) else os.path.join(self.results_dir, output)

    def save_result(self, result: ExperimentResult, output: str = None) -> str:
        """Write the table (and per-trial records, if any) and index the run. Returns the table path."""
        path = self.resolve_output(output or result.spec.output)
        header = header_lines(result)
        write_table(path, result.table, header)
        paths = {"table": path}
        if result.trials is not None and not result.trials.empty:
            paths["trials"] = trials_path(path)
            write_table(paths["trials"], result.trials, header)
        logger.info("wrote %s (%d rows)", path, len(result.table))
        self.append_run_data(result.spec.name, result.spec.kind, {
            "paths": paths,
            "rows": int(len(result.table)),
            "base_seed": result.spec.base_seed,
        })
        return path

    def append_run_data(self, run_name, kind, data):
        if run_name not in self.data:
            self.data[run_name] = {}

        self.data[run_name][kind] = {
            "data": data,
            "last_updated": datetime.now().isoformat(),
        }
        self.save_data()

    def get_run_data(self, run_name, kind=None):
        if run_name not in self.data:
            return None

        if kind:
            return self.data[run_name].get(kind)
        return self.data[run_name]

    def get_all_runs(self):
        return list(self.data.keys())

    def load_table(self, run_name, kind, which="table"):
        entry = self.get_run_data(run_name, kind)
        if not entry:
            return None
        path = entry["data"]["paths"].get(which)
        if not path or not os.path.exists(path):
            logger.warning("indexed file for %s/%s is missing: %s", run_name, kind, path)
            return None
        return read_table(path)

    def delete_run_data(self, run_name, remove_files=False):
        if run_name not in self.data:
            return False
        if remove_files:
            for entry in self.data[run_name].values():
                self._remove_files(entry)
        del self.data[run_name]
        self.save_data()
        return True

    def delete_run_section(self, run_name, kind, remove_files=False):
        """Drop one kind of a run; the run itself goes once it has no kinds left."""
        if run_name in self.data and kind in self.data[run_name]:
            if remove_files:
                self._remove_files(self.data[run_name][kind])
            del self.data[run_name][kind]
            if not self.data[run_name]:
                del self.data[run_name]
            self.save_data()
            return True
        return False

    @staticmethod
    def _remove_files(entry):
        for path in entry["data"]["paths"].values():
            if os.path.exists(path):
                os.remove(path)
