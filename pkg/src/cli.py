import os
import sys
from functools import wraps
from importlib import metadata

import click

from src.bitstream.stream import bitrate, token_rate
from src.config.config import Config
from src.config.variants import get_available_variants
from src.controller import (
    run_decode,
    run_encode,
    run_eval,
    run_eval_dir,
    run_fit,
    run_info,
)
from src.exceptions import AudioIOError, ValidationError
from src.exporters.json_exporter import JSONExporter
from src.metrics.report import summary_to_text
from src.utils.logging_utils import setup_logging

# Configure logging
logger = setup_logging(Config.LOG_FILE, Config.LOG_LEVEL)

VERSION = "0.1.0"
EXIT_IO = 1
EXIT_VALIDATION = 2


def handle_errors(command):
    """Map library errors to exit codes: 2 for validation, 1 for I/O."""
    @wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except ValidationError as e:
            logger.error(f"Validation error: {e}")
            click.echo(f"Error: {e}", err=True)
            sys.exit(EXIT_VALIDATION)
        except (AudioIOError, OSError) as e:
            logger.error(f"I/O error: {e}")
            click.echo(f"Error: {e}", err=True)
            sys.exit(EXIT_IO)
        except KeyboardInterrupt:
            logger.info("Process interrupted by user.")
            sys.exit(0)
    return wrapper


def parse_levels(ctx, param, value):
    if value is None:
        return None
    try:
        levels = tuple(int(part) for part in value.split(",") if part.strip())
    except ValueError:
        raise click.BadParameter("expected a comma-separated list of integers, e.g. 8,5,5,5")
    if not levels:
        raise click.BadParameter("at least one level count is required")
    return levels


@click.group()
def cli():
    """Spectral codec - mel-spectrogram tokenizer with FSQ/RVQ quantization."""
    pass


@cli.command('fit')
@click.argument('corpus_dir', type=click.Path())
@click.option('--out', 'out_model', required=True, type=click.Path(), help='Model file to write')
@click.option('--variant', type=click.Choice(sorted(get_available_variants())), default='fsq',
              help='Quantizer variant')
@click.option('--seed', type=int, default=None,
              help='Seed for codebook training [default: $SPECTRAL_CODEC_SEED or 0]')
@click.option('--ridge-lambda', type=float, default=None, help='Ridge penalty of the synthesis map')
@click.option('--rvq-stages', type=int, default=None, help='Number of RVQ stages')
@click.option('--rvq-size', type=int, default=None, help='Codewords per RVQ stage')
@click.option('--fsq-levels', callback=parse_levels, default=None,
              help='FSQ level counts per group, comma separated (default 8,5,5,5)')
@click.option('--workers', type=int, default=None,
              help='Corpus reader threads, 0 = auto [default: $SPECTRAL_CODEC_WORKERS or 0]')
@click.option('--stats-out', type=click.Path(), default=None, help='Write fit statistics as JSON')
@handle_errors
def fit_command(corpus_dir, out_model, variant, seed, ridge_lambda, rvq_stages, rvq_size,
                fsq_levels, workers, stats_out):
    """
    Fit a codec on a directory of mono WAV files.

    CORPUS_DIR is searched recursively; all files must share one sample rate.
    """
    overrides = {
        "ridge_lambda": ridge_lambda,
        "rvq_stages": rvq_stages,
        "rvq_size": rvq_size,
        "fsq_levels": fsq_levels,
    }
    seed = Config.seed() if seed is None else seed
    workers = Config.workers() if workers is None else workers
    stats = run_fit(corpus_dir, out_model, variant, seed, overrides, workers, stats_out)
    click.echo(f"files={stats['files']}")
    click.echo(f"frames={stats['frames']}")
    click.echo(f"embedding_mean={stats['embedding_mean']:.6f}")
    click.echo(f"embedding_std={stats['embedding_std']:.6f}")
    click.echo(f"saturation={stats['saturation']:.6f}")
    for c, usage in enumerate(stats.get("codebooks", [])):
        click.echo(
            f"codebook_{c}=used {usage['used']}/{usage['size']} perplexity {usage['perplexity']:.1f}"
        )
    click.echo(f"Model saved to: {out_model}")


@cli.command('encode')
@click.argument('in_wav', type=click.Path())
@click.option('--model', 'model_path', required=True, type=click.Path(), help='Codec model file')
@click.option('--out', 'out_spct', required=True, type=click.Path(), help='Token stream to write')
@handle_errors
def encode_command(in_wav, model_path, out_spct):
    """Encode a WAV file into a .spct token stream."""
    stream = run_encode(in_wav, model_path, out_spct)
    header = stream.header
    click.echo(f"frames={header.num_frames}")
    click.echo(f"token_rate={token_rate(header):.2f} tokens/s")
    click.echo(f"bitrate={bitrate(header):.1f} bps")


@cli.command('decode')
@click.argument('in_spct', type=click.Path())
@click.option('--model', 'model_path', required=True, type=click.Path(), help='Codec model file')
@click.option('--out', 'out_wav', required=True, type=click.Path(), help='WAV file to write')
@click.option('--gl-iters', type=int, default=None,
              help='Griffin-Lim iterations [default: $SPECTRAL_CODEC_GL_ITERS or 32]')
@click.option('--seed', type=int, default=None,
              help='Seed for the Griffin-Lim initial phase [default: $SPECTRAL_CODEC_SEED or 0]')
@handle_errors
def decode_command(in_spct, model_path, out_wav, gl_iters, seed):
    """Decode a .spct token stream into a 16-bit PCM WAV file."""
    gl_iters = Config.gl_iters() if gl_iters is None else gl_iters
    seed = Config.seed() if seed is None else seed
    audio = run_decode(in_spct, model_path, out_wav, gl_iters, seed)
    click.echo(f"samples={len(audio)}")
    click.echo(f"duration={audio.duration:.3f} s")
    click.echo(f"Audio saved to: {out_wav}")


@cli.command('eval')
@click.argument('reference', type=click.Path())
@click.argument('estimate', type=click.Path())
@click.option('--stream', 'stream_path', type=click.Path(), default=None,
              help='Token stream of the estimate, for the bitrate field')
@click.option('--json-out', type=click.Path(), default=None, help='Write the report as JSON')
@handle_errors
def eval_command(reference, estimate, stream_path, json_out):
    """
    Compare a reconstruction with its reference.

    REFERENCE and ESTIMATE are WAV files, or directories whose WAV files are
    paired by relative path; directories print mean ± 95% confidence.
    """
    if os.path.isdir(reference) and os.path.isdir(estimate):
        reports, summary = run_eval_dir(reference, estimate, stream_path)
        click.echo(f"files={len(reports)}")
        click.echo(summary_to_text(summary))
        if json_out:
            JSONExporter().export_reports(reports, json_out, summary)
        return
    report = run_eval(reference, estimate, stream_path)
    click.echo(report.to_text())
    if json_out:
        JSONExporter().export_reports({os.path.basename(estimate): report}, json_out)


@cli.command('info')
@click.argument('path', type=click.Path())
@handle_errors
def info_command(path):
    """Print the header of a .spct stream or a codec model."""
    for name, value in run_info(path).items():
        click.echo(f"{name}={value}")


@cli.command('variants')
def list_variants():
    """Lists available quantizer variants."""
    for key, variant in get_available_variants().items():
        click.echo(f"{key}: {variant['name']} - {variant['description']}")


@cli.command()
def version():
    """Displays the spectral codec version."""
    try:
        current = metadata.version("spectral-codec")
    except metadata.PackageNotFoundError:
        current = VERSION
    click.echo(f"spectral-codec version {current}")


if __name__ == '__main__':
    try:
        cli()
    except KeyboardInterrupt:
        logger.info("Process interrupted by user.")
        sys.exit(0)
