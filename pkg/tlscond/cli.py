"""Command-line surface: Matrix Market I/O, the shared command base and ``main``.

Exit codes: 0 on success, 1 on numerical/model errors, 2 on usage errors
and unreadable or malformed input files.
"""
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple
import json
import os
import sys

import numpy as np
import scipy.io
import scipy.sparse
from django.core.management.base import BaseCommand, CommandError
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from generators.generators import GeneratorSpec, generate
from tls.tls import DEFAULT_TOL_GAP, TlsProblem
from tlscond.tlscond import ParseError, TlsError, setting

COMMANDS = ('solve', 'analyze', 'bounds', 'experiment', 'verify')

OutputFormat = Literal['human', 'csv', 'json']

MM_BANNER = '%%MatrixMarket'

# largest matrix (rows * cols) the reader will densify
MAX_DENSE_ENTRIES = 50_000_000

# what scipy.io.mminfo / mmread raise on malformed input
MM_READ_ERRORS = (ValueError, RuntimeError, OverflowError, IndexError, TypeError)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand and return its exit code"""
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'tlscondition.settings')
    import django
    from django.core.management import execute_from_command_line

    args = list(sys.argv[1:] if argv is None else argv)
    django.setup()
    if not args or args[0] not in COMMANDS + ('help', '--help', '-h', '--version'):
        sys.stderr.write(f"usage: manage.py {{{','.join(COMMANDS)}}} [options]\n")
        if args:
            sys.stderr.write(f"unknown command: {args[0]!r}\n")
        return 2
    try:
        execute_from_command_line(['manage.py', *args])
    except SystemExit as e:
        if e.code is None:
            return 0
        return e.code if isinstance(e.code, int) else 1
    return 0


def _open_text(path) -> List[str]:
    try:
        with open(path, encoding='utf-8') as f:
            return f.read().splitlines()
    except (OSError, UnicodeDecodeError) as e:
        raise ParseError(f"cannot read file: {e}", path=str(path))


def _parse_number(token: str, path: str, line: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"not a number: {token!r}", path=path, line=line)
    if not np.isfinite(value):
        raise ParseError(f"non-finite entry {token!r}", path=path, line=line)
    return value


def _parse_int(token: str, path: str, line: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"not an integer: {token!r}", path=path, line=line)


def _body(lines: List[str]) -> List[Tuple[int, List[str]]]:
    """(line number, tokens) of every non-comment, non-blank line after the header"""
    return [
        (i, text.split())
        for i, text in enumerate(lines[1:], start=2)
        if text.strip() and not text.lstrip().startswith('%')
    ]


def _locate_error(lines: List[str], path: str) -> None:
    """Raise a ParseError at the first malformed line; returns if none is found"""
    header = lines[0].split() if lines else []
    if len(header) != 5 or header[0] != MM_BANNER or header[1].lower() != 'matrix':
        raise ParseError("expected '%%MatrixMarket matrix <format> <field> <symmetry>' header", path=path, line=1)
    layout = header[2].lower()

    body = _body(lines)
    if not body:
        raise ParseError("missing size line", path=path, line=len(lines))
    size_line, size = body[0]
    expected = 2 if layout == 'array' else 3
    if len(size) != expected:
        raise ParseError(f"size line needs {expected} integers", path=path, line=size_line)
    dims = [_parse_int(t, path, size_line) for t in size]
    rows, cols = dims[0], dims[1]

    entries = body[1:]
    if layout == 'array':
        if len(entries) > rows * cols:
            raise ParseError(f"more than {rows * cols} entries", path=path, line=entries[rows * cols][0])
        for line, tokens in entries:
            if len(tokens) != 1:
                raise ParseError("array entries hold one value per line", path=path, line=line)
            _parse_number(tokens[0], path, line)
        if len(entries) < rows * cols:
            raise ParseError(f"expected {rows * cols} entries, found {len(entries)}", path=path, line=len(lines))
        return

    nnz = dims[2]
    for line, tokens in entries:
        if len(tokens) != 3:
            raise ParseError("coordinate entries need 'row col value'", path=path, line=line)
        i, j = _parse_int(tokens[0], path, line), _parse_int(tokens[1], path, line)
        if not (1 <= i <= rows and 1 <= j <= cols):
            raise ParseError(f"index ({i}, {j}) outside {rows}x{cols}", path=path, line=line)
        _parse_number(tokens[2], path, line)
    if len(entries) != nnz:
        raise ParseError(f"expected {nnz} entries, found {len(entries)}", path=path, line=len(lines))


def _read_lines(lines: List[str], path: str) -> np.ndarray:
    try:
        rows, cols, _, layout, field, symmetry = scipy.io.mminfo(path)
    except MM_READ_ERRORS as e:
        _locate_error(lines, path)
        raise ParseError(f"unreadable Matrix Market header: {e}", path=path, line=1)
    if layout not in ('array', 'coordinate'):
        raise ParseError(f"unsupported format {layout!r}", path=path, line=1)
    if field not in ('real', 'integer'):
        raise ParseError(f"unsupported field {field!r}; only real data is accepted", path=path, line=1)
    if symmetry != 'general':
        raise ParseError(f"unsupported symmetry {symmetry!r}", path=path, line=1)

    body = _body(lines)
    size_line = body[0][0] if body else len(lines)
    if rows < 1 or cols < 1:
        raise ParseError(f"invalid dimensions {rows}x{cols}", path=path, line=size_line)
    if rows * cols > MAX_DENSE_ENTRIES:
        raise ParseError(
            f"{rows}x{cols} exceeds the dense limit of {MAX_DENSE_ENTRIES} entries",
            path=path, line=size_line,
        )

    try:
        M = scipy.io.mmread(path)
    except MM_READ_ERRORS as e:
        _locate_error(lines, path)
        raise ParseError(f"malformed Matrix Market body: {e}", path=path)
    if scipy.sparse.issparse(M):
        M = M.toarray()
    M = np.asarray(M, dtype=np.float64).reshape(rows, cols)
    if not np.all(np.isfinite(M)):
        _locate_error(lines, path)
        raise ParseError("non-finite entry", path=path)
    return M


def read_matrix_market(path) -> np.ndarray:
    """Dense matrix from a Matrix Market array or coordinate file (real, general)"""
    return _read_lines(_open_text(path), str(path))


def read_vector(path) -> np.ndarray:
    """Right-hand side from an m x 1 Matrix Market file or whitespace-separated numbers"""
    lines = _open_text(path)
    if lines and lines[0].startswith(MM_BANNER):
        M = _read_lines(lines, str(path))
        if 1 not in M.shape:
            raise ParseError(f"expected a vector, got a {M.shape[0]}x{M.shape[1]} matrix", path=str(path))
        return M.ravel()
    values = [
        _parse_number(token, str(path), line)
        for line, text in enumerate(lines, start=1)
        if not text.lstrip().startswith('%')
        for token in text.split()
    ]
    if not values:
        raise ParseError("no numbers found", path=str(path))
    return np.array(values)


def write_matrix_market(path, M, comment: str = '') -> None:
    """Array-format Matrix Market with 17 significant digits"""
    arr = np.asarray(M, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    with open(path, 'wb') as f:
        scipy.io.mmwrite(f, arr, comment=comment, field='real', precision=17)


class CliConfig(BaseModel):
    """Validated invocation: exactly one of (matrix, rhs) or generator"""
    model_config = ConfigDict(frozen=True)

    subcommand: Literal['solve', 'analyze', 'bounds', 'experiment', 'verify']
    matrix: Optional[Path] = None
    rhs: Optional[Path] = None
    generator: Optional[GeneratorSpec] = None
    seed: int = 0
    tol_gap: float = DEFAULT_TOL_GAP
    samples: int = 100
    format: OutputFormat = 'human'
    output: Optional[Path] = None

    @model_validator(mode='after')
    def _one_source(self) -> 'CliConfig':
        files = self.matrix is not None or self.rhs is not None
        if files and self.generator is not None:
            raise ValueError("give either --matrix/--rhs or --gen, not both")
        if not files and self.generator is None:
            raise ValueError("an input is required: --matrix and --rhs, or --gen")
        if files and (self.matrix is None or self.rhs is None):
            raise ValueError("--matrix and --rhs must be given together")
        if self.subcommand == 'experiment' and self.generator is None:
            raise ValueError("experiment needs a generator (--gen)")
        if self.samples < 1:
            raise ValueError("--samples must be at least 1")
        if self.tol_gap <= 0.0:
            raise ValueError("--tol-gap must be positive")
        return self

    @property
    def source(self) -> str:
        if self.generator is not None:
            return f"{self.generator.kind}#{self.generator.seed}"
        return str(self.matrix)


class TlsCommand(BaseCommand):
    """Shared input options, error mapping and output handling for every subcommand"""
    requires_system_checks = []
    subcommand = None

    def add_arguments(self, parser):
        source = parser.add_argument_group('input')
        source.add_argument('--matrix', type=Path, help='Matrix Market file holding A')
        source.add_argument('--rhs', type=Path, help='Matrix Market or plain-text file holding b')
        source.add_argument(
            '--gen',
            choices=['bg_example', 'vanhuffel', 'toeplitz_blur', 'controlled_alpha', 'gaussian'],
            help='Generate the problem instead of reading files',
        )
        source.add_argument('--m', type=int, help='Rows of A (generators)')
        source.add_argument('--n', type=int, help='Columns of A (generators)')
        source.add_argument('--e-p', type=float, dest='e_p', help='Singular value gap (bg_example)')
        source.add_argument('--alpha', type=float, help='Target alpha (controlled_alpha)')
        source.add_argument('--omega', type=int, help='Blur half-width (toeplitz_blur, default: 8)')
        source.add_argument('--beta-blur', type=float, dest='beta_blur', help='Blur width (toeplitz_blur, default: 1.25)')
        source.add_argument('--gamma', type=float, help='Noise level (toeplitz_blur, default: 1e-3)')

        parser.add_argument(
            '--seed', type=int, default=setting('TLSCOND_SEED', 0),
            help='Random seed (default: TLSCOND_SEED or 0)',
        )
        parser.add_argument(
            '--tol-gap', type=float, dest='tol_gap', default=setting('TLSCOND_TOL_GAP', DEFAULT_TOL_GAP),
            help='Genericity tolerance relative to sigma_1 (default: 1e-12)',
        )
        parser.add_argument(
            '--size-cap-k', type=int, dest='size_cap_k', default=setting('TLSCOND_SIZE_CAP_K', 4_000_000),
            help='Largest Kronecker matrix (entries) to materialize',
        )
        parser.add_argument(
            '--format', choices=['human', 'csv', 'json'], default=setting('TLSCOND_FORMAT', 'human'),
            help='Output format (default: human)',
        )
        parser.add_argument('--output', type=Path, help='Write results here instead of stdout')

    def build_config(self, options: Dict[str, Any]) -> CliConfig:
        generator = None
        if options.get('gen'):
            generator = {
                'kind': options['gen'],
                'm': options.get('m'),
                'n': options.get('n'),
                'e_p': options.get('e_p'),
                'alpha': options.get('alpha'),
                'omega': options.get('omega'),
                'beta_blur': options.get('beta_blur'),
                'gamma': options.get('gamma'),
                'seed': options['seed'],
            }
            generator = {k: v for k, v in generator.items() if v is not None}
        try:
            return CliConfig(
                subcommand=self.subcommand,
                matrix=options.get('matrix'),
                rhs=options.get('rhs'),
                generator=generator,
                seed=options['seed'],
                tol_gap=options['tol_gap'],
                samples=100 if options.get('samples') is None else options['samples'],
                format=options['format'],
                output=options.get('output'),
            )
        except ValidationError as e:
            messages = '; '.join(err['msg'] for err in e.errors())
            raise CommandError(f"invalid arguments: {messages}", returncode=2)

    def load_problem(self, config: CliConfig) -> TlsProblem:
        if config.generator is not None:
            return generate(config.generator)
        A = read_matrix_market(config.matrix)
        b = read_vector(config.rhs)
        return TlsProblem(A=A, b=b)

    def emit(self, config: CliConfig, text: str) -> None:
        if not text.endswith('\n'):
            text += '\n'
        if config.output is not None:
            config.output.write_text(text, encoding='utf-8')
        else:
            self.stdout.write(text, ending='')

    def compute(self, config: CliConfig, options: Dict[str, Any]) -> str:
        """Compute and return the rendered output"""
        raise NotImplementedError

    def handle(self, *args, **options):
        config = self.build_config(options)
        try:
            self.emit(config, self.compute(config, options))
        except ParseError as e:
            if config.format == 'json':
                self.stdout.write(json.dumps(e.to_dict()))
            raise CommandError(str(e), returncode=2)
        except TlsError as e:
            if config.format == 'json':
                self.stdout.write(json.dumps(e.to_dict()))
            raise CommandError(f"{e.code}: {e}", returncode=1)
