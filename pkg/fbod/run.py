import argparse
import logging
import os
import sys
import time
from contextlib import ExitStack

import numpy as np

from fbod import version
from fbod.core import DEFAULT_GUARD, SUPPORTED_NORMALIZE, NORMALIZE_NONE, Dataset, FbodParams, \
    FluctuationDetector, generate_graph
from fbod.dataset_io import CsvSchema, drop_duplicates, format_table, load_csv, load_frames, load_labels, \
    with_labels, write_dataset, write_fluctuations, write_frames, write_scores, write_table
from fbod.exceptions import DatasetError, FbodError, InvalidParameterError
from fbod.metrics import evaluate, neighborhood_outlier_ratio
from fbod.synth import ClusterSpec, FrameSpec, Patch, make_clusters, make_frames
from fbod.utils import atomic_path, non_negative_int, parse_range, parse_sizes, positive_float, positive_int, seed_int

# BASE INFORMATION
COMMAND = 'command'
LOG_LEVEL = 'log_level'

# INPUT INFORMATION
INPUT = 'input'
LABELS = 'labels'
NO_HEADER = 'no_header'
LABEL_COLUMN = 'label_column'
DELIMITER = 'delimiter'
DEDUPE = 'dedupe'

# DETECTOR INFORMATION
K = 'k'
GRAPHS = 'graphs'
TOP_P = 'top_p'
SEED = 'seed'
NORMALIZE = 'normalize'
GUARD = 'guard'
THREADS = 'threads'

# OUTPUT INFORMATION
OUTPUT = 'output'
FLUCTUATIONS = 'fluctuations'

# SWEEP AND BENCH INFORMATION
K_RANGE = 'k_range'
T_RANGE = 't_range'
SIZES = 'sizes'
DIMS = 'dims'
REPEAT = 'repeat'

# SYNTH INFORMATION
KIND = 'kind'
N_NORMAL = 'n_normal'
N_OUTLIERS = 'n_outliers'
SPREAD = 'spread'
OFFSET = 'offset'
WIDTH = 'width'
HEIGHT = 'height'
NOISE = 'noise'
PATCH = 'patch'
DELTA = 'delta'

SUPPORTED_COMMANDS = [
    'detect',
    'eval',
    'sweep',
    'bench',
    'synth',
]
SUPPORTED_LOG_LEVELS = ['DEBUG', 'INFO', 'WARNING', 'ERROR']
SWEEP_COLUMNS = ['k', 'T', 'auc', 'time_ms']
BENCH_COLUMNS = ['n', 'time_ms']
EVAL_KEYS = ['auc', 'acc', 'dr', 'far', 'tp', 'tn', 'fp', 'fn', 'time_ms', 'nbr_outlier_ratio']
BENCH_OUTLIER_SHARE = 100


def label_column(value: str):
    try:
        return int(value)
    except ValueError:
        return value


def patch_box(value: str) -> tuple:
    try:
        x, y, width, height = (int(part) for part in value.split(','))
    except ValueError:
        raise argparse.ArgumentTypeError(f"{value} is not an x,y,width,height box")
    return x, y, width, height


def add_input_arguments(parser):
    parser.add_argument(INPUT, type=str,
                        help="Enter a CSV file (one object per row) or a directory of PGM frames")
    parser.add_argument('--labels', dest=LABELS, required=False, type=str, default=None,
                        help="Enter a label file (single column with a header) when labels are not in the input")
    parser.add_argument('--no-header', dest=NO_HEADER, action='store_true',
                        help="The CSV file has no header line")
    parser.add_argument('--label-column', dest=LABEL_COLUMN, required=False, type=label_column, default=None,
                        help="Enter the label column name or 0-based position in the CSV file")
    parser.add_argument('--delimiter', dest=DELIMITER, required=False, type=str, default=',',
                        help="Enter the CSV delimiter. Default value is ','")
    parser.add_argument('--dedupe', dest=DEDUPE, action='store_true',
                        help="Remove duplicate objects before scoring")


def add_detector_arguments(parser, with_k=True, with_graphs=True):
    if with_k:
        parser.add_argument('--k', dest=K, required=False, type=positive_int, default=10,
                            help="Enter the number of sampled neighbors. Default value is 10")
    if with_graphs:
        parser.add_argument('--graphs', dest=GRAPHS, required=False, type=positive_int, default=2,
                            help="Enter the number of generated graphs (T). Default value is 2")
    parser.add_argument('--seed', dest=SEED, required=False, type=seed_int, default=0,
                        help="Enter the 64-bit seed of the neighbor sampling. Default value is 0")
    parser.add_argument('--normalize', dest=NORMALIZE, required=False, choices=SUPPORTED_NORMALIZE,
                        default=NORMALIZE_NONE, help="Enter the input normalization. Default value is none")
    parser.add_argument('--guard', dest=GUARD, required=False, type=positive_float, default=DEFAULT_GUARD,
                        help=f"Enter the fluctuation denominator guard. Default value is {DEFAULT_GUARD}")
    parser.add_argument('--threads', dest=THREADS, required=False, type=positive_int, default=1,
                        help="Enter the maximum number of worker threads. Results do not depend on it")


def parse_args(argv=None):
    # BASE PARSER
    argument_parser = argparse.ArgumentParser(
        prog='fbod', description="Fluctuation-based outlier detection over randomly linked graphs")
    argument_parser.add_argument('--version', action='version', version=f"%(prog)s {version}")
    argument_parser.add_argument('--log-level', dest=LOG_LEVEL, required=False, default='WARNING',
                                 choices=SUPPORTED_LOG_LEVELS, help="Enter the log level. Default value is WARNING")

    # SUB PARSER
    sub_argument_parsers = argument_parser.add_subparsers(
        help=f"Enter a command. Supported commands: {SUPPORTED_COMMANDS}", dest=COMMAND)
    sub_argument_parsers.required = True

    # DETECT PARSER
    detect_parser = sub_argument_parsers.add_parser('detect', help="Score a dataset and write the outlier factors")
    add_input_arguments(detect_parser)
    add_detector_arguments(detect_parser)
    detect_parser.add_argument('--top-p', dest=TOP_P, required=False, type=non_negative_int, default=None,
                               help="Enter the number of reported outliers. "
                                    "Defaults to the true outlier count when labels exist, else 0")
    detect_parser.add_argument('-o', '--output', dest=OUTPUT, required=True, type=str,
                               help="Enter the scores CSV path")
    detect_parser.add_argument('--fluctuations', dest=FLUCTUATIONS, required=False, type=str, default=None,
                               help="Enter a CSV path for the per-object mean fluctuation")

    # EVAL PARSER
    eval_parser = sub_argument_parsers.add_parser('eval', help="Score a labelled dataset and report AUC/ACC/DR/FAR")
    add_input_arguments(eval_parser)
    add_detector_arguments(eval_parser)
    eval_parser.add_argument('--top-p', dest=TOP_P, required=False, type=non_negative_int, default=None,
                             help="Enter the number of reported outliers. Defaults to the true outlier count")
    eval_parser.add_argument('-o', '--output', dest=OUTPUT, required=False, type=str, default=None,
                             help="Enter a CSV path for the metrics report")

    # SWEEP PARSER
    sweep_parser = sub_argument_parsers.add_parser('sweep', help="Evaluate a grid of k and T values")
    add_input_arguments(sweep_parser)
    add_detector_arguments(sweep_parser)
    sweep_parser.add_argument('--k-range', dest=K_RANGE, required=False, type=parse_range, default=None,
                              help="Enter an inclusive lo:hi:step range of k. Defaults to --k alone")
    sweep_parser.add_argument('--t-range', dest=T_RANGE, required=False, type=parse_range, default=None,
                              help="Enter an inclusive lo:hi:step range of T. Defaults to --graphs alone")
    sweep_parser.add_argument('--top-p', dest=TOP_P, required=False, type=non_negative_int, default=None,
                              help="Enter the number of reported outliers. Defaults to the true outlier count")
    sweep_parser.add_argument('-o', '--output', dest=OUTPUT, required=False, type=str, default=None,
                              help="Enter the sweep CSV path. Defaults to standard output")

    # BENCH PARSER
    bench_parser = sub_argument_parsers.add_parser('bench', help="Time detection on synthetic data of growing size")
    add_detector_arguments(bench_parser)
    bench_parser.add_argument('--sizes', dest=SIZES, required=True, type=parse_sizes,
                              help="Enter strictly increasing object counts, e.g. 10000,100000")
    bench_parser.add_argument('--dims', dest=DIMS, required=False, type=positive_int, default=8,
                              help="Enter the number of features. Default value is 8")
    bench_parser.add_argument('--repeat', dest=REPEAT, required=False, type=positive_int, default=3,
                              help="Enter the number of timed repetitions per size. Default value is 3")
    bench_parser.add_argument('-o', '--output', dest=OUTPUT, required=False, type=str, default=None,
                              help="Enter the benchmark CSV path. Defaults to standard output")

    # SYNTH PARSER
    synth_parser = sub_argument_parsers.add_parser('synth', help="Write a synthetic dataset")
    synth_kinds = synth_parser.add_subparsers(dest=KIND, help="Enter a generator: clusters or frames")
    synth_kinds.required = True

    clusters_parser = synth_kinds.add_parser('clusters', help="Gaussian cluster with planted outliers (CSV)")
    clusters_parser.add_argument('--n-normal', dest=N_NORMAL, type=positive_int, default=16)
    clusters_parser.add_argument('--n-outliers', dest=N_OUTLIERS, type=non_negative_int, default=4)
    clusters_parser.add_argument('--dims', dest=DIMS, type=positive_int, default=2)
    clusters_parser.add_argument('--spread', dest=SPREAD, type=positive_float, default=1.0)
    clusters_parser.add_argument('--offset', dest=OFFSET, type=positive_float, default=20.0,
                                 help="Enter the minimum outlier distance in units of spread (>= 10)")
    clusters_parser.add_argument('--seed', dest=SEED, type=seed_int, default=0)
    clusters_parser.add_argument('-o', '--output', dest=OUTPUT, required=True, type=str,
                                 help="Enter the CSV path")

    frames_parser = synth_kinds.add_parser('frames', help="Frame sequence with anomalous patches (PGM directory)")
    frames_parser.add_argument('--width', dest=WIDTH, type=positive_int, default=40)
    frames_parser.add_argument('--height', dest=HEIGHT, type=positive_int, default=30)
    frames_parser.add_argument('--n-normal', dest=N_NORMAL, type=positive_int, default=60)
    frames_parser.add_argument('--n-anomalous', dest=N_OUTLIERS, type=non_negative_int, default=3)
    frames_parser.add_argument('--noise', dest=NOISE, type=float, default=10.0)
    frames_parser.add_argument('--patch', dest=PATCH, type=patch_box, default=(10, 8, 10, 10),
                               help="Enter the anomalous patch as x,y,width,height")
    frames_parser.add_argument('--delta', dest=DELTA, type=float, default=80.0,
                               help="Enter the intensity shift of the patch. Default value is 80")
    frames_parser.add_argument('--seed', dest=SEED, type=seed_int, default=0)
    frames_parser.add_argument('-o', '--output', dest=OUTPUT, required=True, type=str,
                               help="Enter the output directory")

    args = vars(argument_parser.parse_args(argv))
    return args


class Run:
    def __init__(
            self,
            parameters
    ):
        self.parameters = parameters
        self.command = self.parameters[COMMAND]

        # Logging
        self.logger = logging.getLogger('Run')
        logging.basicConfig(
            format='%(asctime)s.%(msecs)03d %(levelname)s %(module)s - %(funcName)s: %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )

    def load_dataset(self) -> Dataset:
        parameters = self.parameters
        if os.path.isdir(parameters[INPUT]):
            dataset = load_frames(parameters[INPUT], parameters[LABELS])
        else:
            schema = CsvSchema(
                has_header=not parameters[NO_HEADER],
                label_column=parameters[LABEL_COLUMN],
                delimiter=parameters[DELIMITER],
            )
            dataset = load_csv(parameters[INPUT], schema)
            if parameters[LABELS] is not None:
                dataset = with_labels(dataset, load_labels(parameters[LABELS]))
        if parameters[DEDUPE]:
            dataset = drop_duplicates(dataset)
        self.logger.info(f"Dataset {parameters[INPUT]}: n={dataset.n}, D={dataset.dims}, "
                         f"outliers={dataset.outlier_count if dataset.labels is not None else 'unknown'}")
        return dataset

    def require_labels(self, dataset: Dataset):
        if dataset.labels is None:
            self.logger.error(f"{self.parameters[INPUT]} has no labels")
            raise DatasetError(f"{self.parameters[INPUT]} has no labels; "
                               f"use --label-column or --labels")

    def top_p(self, dataset: Dataset) -> int:
        if self.parameters[TOP_P] is not None:
            return self.parameters[TOP_P]
        return dataset.outlier_count

    def params(self, dataset: Dataset, k: int = None, graphs: int = None, seed: int = None) -> FbodParams:
        parameters = self.parameters
        return FbodParams(
            k=parameters[K] if k is None else k,
            graph_count=parameters[GRAPHS] if graphs is None else graphs,
            top_p=self.top_p(dataset),
            seed=parameters[SEED] if seed is None else seed,
            denom_guard=parameters[GUARD],
            normalize=parameters[NORMALIZE],
        )

    def timed_detect(self, dataset: Dataset, params: FbodParams):
        detector = FluctuationDetector(params, self.parameters[THREADS])
        started = time.perf_counter()
        report = detector.detect(dataset)
        return report, (time.perf_counter() - started) * 1000.0

    def emit(self, lines):
        sys.stdout.write(''.join(f"{line}\n" for line in lines))
        sys.stdout.flush()

    def cmd_detect(self):
        """
        Scores the dataset, writes the score file and prints n, D, time and the top-p objects
        """
        dataset = self.load_dataset()
        params = self.params(dataset)
        report, elapsed = self.timed_detect(dataset, params)
        # both files land together or neither does
        with ExitStack() as stack:
            scores_path = stack.enter_context(atomic_path(self.parameters[OUTPUT]))
            if self.parameters[FLUCTUATIONS] is not None:
                write_fluctuations(report, stack.enter_context(atomic_path(self.parameters[FLUCTUATIONS])))
            write_scores(report, scores_path)
        self.emit([
            f"n={dataset.n}",
            f"D={dataset.dims}",
            f"time_ms={elapsed:.3f}",
            f"top_p={','.join(str(index) for index in report.top.tolist())}",
        ])
        return report

    def cmd_eval(self):
        """
        Scores a labelled dataset and prints the metrics as key=value lines
        """
        dataset = self.load_dataset()
        self.require_labels(dataset)
        params = self.params(dataset)
        report, elapsed = self.timed_detect(dataset, params)
        result = evaluate(report, dataset.labels)

        ratio = np.mean([
            neighborhood_outlier_ratio(generate_graph(dataset.n, params.k, t, params.seed), dataset.labels)
            for t in range(params.graph_count)
        ])
        values = result.to_dict()
        values['time_ms'] = round(elapsed, 3)
        values['nbr_outlier_ratio'] = float(ratio)
        if self.parameters[OUTPUT] is not None:
            write_table([values], EVAL_KEYS, self.parameters[OUTPUT])
        self.emit(f"{key}={values[key]}" for key in EVAL_KEYS)
        return result

    def sweep_grid(self, dataset: Dataset) -> list:
        parameters = self.parameters
        k_values = parameters[K_RANGE] if parameters[K_RANGE] is not None else [parameters[K]]
        t_values = parameters[T_RANGE] if parameters[T_RANGE] is not None else [parameters[GRAPHS]]
        out_of_range = [k for k in k_values if k > dataset.n - 1]
        if out_of_range:
            self.logger.error(f"k values {out_of_range} exceed n - 1 = {dataset.n - 1}")
            raise InvalidParameterError(f"k={out_of_range[0]} is out of range: k must be <= n - 1 ({dataset.n - 1})")
        return [(k, t) for k in k_values for t in t_values]

    def cmd_sweep(self):
        """
        One evaluation per (k, T) grid point, seeded with seed + grid index
        """
        dataset = self.load_dataset()
        self.require_labels(dataset)
        grid = self.sweep_grid(dataset)
        self.logger.info(f"Sweeping {len(grid)} grid points")

        rows = []
        for index, (k, graphs) in enumerate(grid):
            params = self.params(dataset, k=k, graphs=graphs, seed=(self.parameters[SEED] + index) % 2 ** 64)
            report, elapsed = self.timed_detect(dataset, params)
            result = evaluate(report, dataset.labels)
            self.logger.debug(f"k={k}, T={graphs}: auc={result.auc}")
            rows.append({'k': k, 'T': graphs, 'auc': result.auc, 'time_ms': round(elapsed, 3)})
        self.write_rows(rows, SWEEP_COLUMNS)
        return rows

    def cmd_bench(self):
        """
        Median detection time per size; data generation and I/O stay outside the timed region
        """
        parameters = self.parameters
        too_small = [n for n in parameters[SIZES] if n < parameters[K] + 1]
        if too_small:
            self.logger.error(f"sizes {too_small} are too small for k={parameters[K]}")
            raise InvalidParameterError(f"n={too_small[0]} is out of range: k ({parameters[K]}) must be <= n - 1")

        rows = []
        for n in parameters[SIZES]:
            n_outliers = n // BENCH_OUTLIER_SHARE
            dataset = make_clusters(ClusterSpec(n_normal=n - n_outliers, n_outliers=n_outliers,
                                                dims=parameters[DIMS], seed=parameters[SEED]))
            params = FbodParams(k=parameters[K], graph_count=parameters[GRAPHS], top_p=n_outliers,
                                seed=parameters[SEED], denom_guard=parameters[GUARD],
                                normalize=parameters[NORMALIZE])
            # warm-up, not timed
            self.timed_detect(dataset, params)
            timings = [self.timed_detect(dataset, params)[1] for _ in range(parameters[REPEAT])]
            median = float(np.median(timings))
            self.logger.info(f"n={n}: median {median:.3f} ms over {len(timings)} runs")
            rows.append({'n': n, 'time_ms': round(median, 3)})
        self.write_rows(rows, BENCH_COLUMNS)
        return rows

    def cmd_synth(self):
        parameters = self.parameters
        if parameters[KIND] == 'clusters':
            dataset = make_clusters(ClusterSpec(
                n_normal=parameters[N_NORMAL],
                n_outliers=parameters[N_OUTLIERS],
                dims=parameters[DIMS],
                cluster_spread=parameters[SPREAD],
                outlier_offset=parameters[OFFSET],
                seed=parameters[SEED],
            ))
            write_dataset(dataset, parameters[OUTPUT])
            return dataset
        x, y, width, height = parameters[PATCH]
        frames = make_frames(FrameSpec(
            width=parameters[WIDTH],
            height=parameters[HEIGHT],
            n_normal=parameters[N_NORMAL],
            n_anomalous=parameters[N_OUTLIERS],
            noise_amplitude=parameters[NOISE],
            patch=Patch(x, y, width, height, parameters[DELTA]),
            seed=parameters[SEED],
        ))
        write_frames(frames, parameters[OUTPUT])
        return frames

    def write_rows(self, rows, columns):
        if self.parameters[OUTPUT] is None:
            sys.stdout.write(format_table(rows, columns))
            sys.stdout.flush()
        else:
            write_table(rows, columns, self.parameters[OUTPUT])

    def run(self):
        """
        Runs the requested command
        """
        self.logger.info(f"Running {self.command}")
        if self.command == 'detect':
            return self.cmd_detect()
        elif self.command == 'eval':
            return self.cmd_eval()
        elif self.command == 'sweep':
            return self.cmd_sweep()
        elif self.command == 'bench':
            return self.cmd_bench()
        elif self.command == 'synth':
            return self.cmd_synth()
        else:
            self.logger.error(f"Not valid command: {self.command}")
            raise InvalidParameterError(f"Not valid command: {self.command}")


def main(argv=None) -> int:
    parameters = parse_args(argv)
    logging.getLogger().setLevel(parameters[LOG_LEVEL])
    try:
        Run(parameters).run()
    except (FbodError, OSError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
