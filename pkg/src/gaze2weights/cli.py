"""Command line interface for gaze2weights."""

import functools
import json
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Sequence

import click
import structlog

from . import __version__
from .config.settings import RunConfig, settings
from .core.artifacts import MaskConfig
from .core.entities import Fixation, SessionMode, TokenMap
from .core.training import DpoConfig
from .exceptions import Gaze2WeightsException, TokenMapException
from .factories.tokenizer_factory import TokenizerFactory
from .services.artifact_validation_service import ArtifactValidationService
from .services.attention_metrics_service import AttentionMetricsService, rows_from_payload
from .services.corpus_simulation_service import CorpusSimulationService
from .services.gaze_ingest_service import GazeIngestService
from .services.loss_engine import LossEngine
from .services.pipeline_service import MINI_CORPUS_DIR, PipelineService, pipeline_stage
from .services.pseudo_attention_service import PseudoAttentionService
from .services.salience_service import SalienceService
from .services.token_alignment_service import TokenAlignmentService
from .services.transition_service import TransitionService
from .services.weight_projection_service import WeightProjectionService
from .utils.artifact_loader import load_artifact_payload, load_config_file, load_geometry, load_scan_paths
from .utils.storage import get_output_directory, write_canonical_json

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

MODE_CHOICE = click.Choice([mode.value for mode in SessionMode])
ABLATIONS = {
    "salience": "use_salience",
    "rarity": "use_rarity",
    "monograms": "use_monograms",
    "higher-order": "use_higher_order",
}
DEFAULT_GEOMETRY = MINI_CORPUS_DIR / "geometry.json"
# "file" needs a shard file path; `project --shards` covers that case.
TOKENIZER_CHOICE = click.Choice(["demo", "tiktoken"])


def setup_logging(verbose: bool = False):
    """Configure logging; log lines go to stderr."""
    level = "DEBUG" if verbose else settings.log_level.value

    processors = [
        structlog.processors.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
    ]

    if verbose:
        processors.append(structlog.processors.JSONRenderer())
    else:
        processors.append(structlog.dev.ConsoleRenderer(colors=False))

    structlog.configure(
        processors=processors,
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        wrapper_class=structlog.make_filtering_bound_logger(min_level=level),
    )


class GazeGroup(click.Group):
    """Command group that reports usage errors with exit code 1."""

    def main(self, *args: Any, **kwargs: Any) -> Any:
        kwargs.pop("standalone_mode", None)
        try:
            return super().main(*args, standalone_mode=False, **kwargs)
        except click.ClickException as exc:
            exc.show()
            sys.exit(EXIT_USAGE)
        except click.exceptions.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(EXIT_USAGE)


def report_errors(func: Callable[..., Any]) -> Callable[..., Any]:
    """Map domain errors to exit code 2 and unexpected errors to exit code 3."""

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        ctx = click.get_current_context()
        verbose = bool((ctx.obj or {}).get("verbose", False))
        try:
            return func(*args, **kwargs)
        except click.ClickException:
            raise
        except Gaze2WeightsException as e:
            click.echo(f"[ERROR] {e!s}", err=True)
            if verbose and e.details:
                click.echo(f"   Details: {e.details}", err=True)
            sys.exit(EXIT_DATA)
        except Exception as e:
            click.echo(f"[ERROR] An unexpected error occurred: {e!s}", err=True)
            if verbose:
                import traceback

                click.echo(traceback.format_exc(), err=True)
            sys.exit(EXIT_INTERNAL)

    return wrapper


def resolve_run_config(ctx: click.Context, **overrides: Any) -> RunConfig:
    """Settings < configuration file < flags; ``None`` flags fall through."""
    layered: Dict[str, Any] = {}
    config_path = ctx.obj.get("config") if ctx.obj else None
    if config_path:
        layered.update(load_config_file(config_path))
    layered.update({key: value for key, value in overrides.items() if value is not None})
    return settings.build_run_config(layered)


def write_json(payload: Any, output: str) -> int:
    return write_canonical_json(output, payload)


def load_token_maps(alignment: TokenAlignmentService, locations: Sequence[str]) -> List[TokenMap]:
    if not locations:
        raise TokenMapException("At least one token map or source file is required")
    return [alignment.load_stimulus(location) for location in locations]


def alignment_for(cfg: RunConfig) -> TokenAlignmentService:
    return TokenAlignmentService(cell_width=cfg.cell_width_px, cell_height=cfg.cell_height_px, taxonomy=cfg.taxonomy)


@click.group(cls=GazeGroup)
@click.version_option(version=__version__, prog_name="gaze2weights")
@click.option("--verbose", "-v", is_flag=True, help="Enable verbose output")
@click.option("--config", type=click.Path(), help="Configuration file path (.toml, .yaml or .json)")
@click.pass_context
def cli(ctx, verbose, config):
    """gaze2weights - Distill developer eye-tracking data into token weights for code-model training."""
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose
    ctx.obj["config"] = config

    setup_logging(verbose)


@cli.command(name="version")
def version():
    """Show the version of the tool."""
    click.echo(f"gaze2weights version {__version__}")


@cli.command(name="config")
@click.pass_context
@report_errors
def config(ctx):
    """Show the resolved run configuration."""
    cfg = resolve_run_config(ctx)
    click.echo("[CONFIG] Current Configuration")
    click.echo("=" * 25)
    click.echo(f"Config file: {ctx.obj.get('config') or 'Not set'}")
    click.echo(f"Config hash: {cfg.config_hash()}")
    click.echo(json.dumps(cfg.hashed_payload(), indent=2, sort_keys=True))


@cli.command(name="init")
@click.option("--path", "config_path", type=click.Path(), default="gaze.toml", help="Where to write the file")
def init(config_path):
    """Create a starter configuration file."""
    target = Path(config_path)
    if target.exists():
        click.echo(f"[ERROR] Configuration file already exists: {target}", err=True)
        sys.exit(EXIT_USAGE)

    config_content = """# gaze2weights configuration file
# Flat keys; command line flags override these values.

mode = "combined"
seed = 42
dispersion_deg = 1.0
min_fixation_ms = 100.0
prune_threshold = 5
line_span_reading = 3
line_span_writing = 5
line_span_combined = 4
w_base = 3.0
dpo_beta = 0.1
dpo_gamma = 0.5
tokenizer = "demo"
"""
    target.write_text(config_content, encoding="utf-8")
    click.echo(f"[OK] Created configuration file: {target}")


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True), help="Planted model (JSON/YAML)")
@click.option("--tokens", "tokens_path", required=True, type=click.Path(exists=True), help="Token map or .java file")
@click.option("--geometry", "geometry_path", type=click.Path(exists=True), help="Session geometry file")
@click.option("--sessions", type=int, help="Number of sessions (overrides the model)")
@click.option("--seed", type=int, help="Simulation seed (overrides the model)")
@click.option("--output", "-o", required=True, type=click.Path(), help="Output directory")
@click.pass_context
@report_errors
def simulate(ctx, model_path, tokens_path, geometry_path, sessions, seed, output):
    """Generate synthetic gaze sessions from a planted model."""
    cfg = resolve_run_config(ctx)
    with pipeline_stage("corpus_sim"):
        geometry = load_geometry(geometry_path or DEFAULT_GEOMETRY)
        token_map = alignment_for(cfg).load_stimulus(tokens_path)
        simulator = CorpusSimulationService(geometry, cfg.dispersion_deg, cfg.min_fixation_ms)
        model = simulator.load_model(model_path)
        overrides = {key: value for key, value in (("session_count", sessions), ("seed", seed)) if value is not None}
        if overrides:
            model = model.with_overrides(**overrides)
        simulated = simulator.simulate_sessions(model, token_map)
        written = simulator.write_sessions(simulated, output)
    click.echo(f"[OK] Wrote {len(written)} sessions to {output}")


@cli.command()
@click.argument("recording", type=click.Path(exists=True))
@click.option("--geometry", "geometry_path", type=click.Path(exists=True), help="Session geometry file")
@click.option("--dispersion", type=float, help="Dispersion threshold in degrees")
@click.option("--min-fix", type=float, help="Minimum fixation duration in ms")
@click.option("--output", "-o", required=True, type=click.Path(), help="Output fixations file")
@click.pass_context
@report_errors
def segment(ctx, recording, geometry_path, dispersion, min_fix, output):
    """Segment one gaze recording into fixations and saccades."""
    cfg = resolve_run_config(ctx, dispersion_deg=dispersion, min_fixation_ms=min_fix)
    with pipeline_stage("gaze_ingest"):
        geometry = load_geometry(geometry_path or DEFAULT_GEOMETRY)
        ingest = GazeIngestService(
            dispersion_deg=cfg.dispersion_deg,
            min_duration_ms=cfg.min_fixation_ms,
            max_velocity_deg_s=cfg.max_velocity_deg_s,
        )
        segmented = ingest.segment_file(recording, geometry)
    write_json({"session_id": Path(recording).stem, **segmented.to_dict()}, output)
    click.echo(
        f"[OK] {len(segmented.fixations)} fixations, {segmented.dropped_samples} samples dropped -> {output}"
    )


@cli.command()
@click.argument("fixations_path", type=click.Path(exists=True))
@click.option("--tokens", "tokens_path", required=True, type=click.Path(exists=True), help="Token map or .java file")
@click.option("--mode", type=MODE_CHOICE, default=SessionMode.READING.value, help="Session mode")
@click.option("--output", "-o", required=True, type=click.Path(), help="Output scan path file")
@click.pass_context
@report_errors
def align(ctx, fixations_path, tokens_path, mode, output):
    """Map fixations onto AST tokens and write the scan path."""
    cfg = resolve_run_config(ctx)
    alignment = alignment_for(cfg)
    with pipeline_stage("token_align"):
        token_map = alignment.load_stimulus(tokens_path)
        payload = load_artifact_payload(fixations_path, artifact_name="fixations")
        raw = payload.get("fixations", []) if isinstance(payload, dict) else payload
        fixations = [Fixation.from_dict(item) for item in raw]
        session_id = payload.get("session_id") if isinstance(payload, dict) else None
        path, discard_ratio = alignment.align_fixations(fixations, token_map, SessionMode(mode), session_id)
        alignment.save_scan_path(path, output)
    click.echo(f"[OK] {len(path)} entries, discard ratio {discard_ratio:.4f} -> {output}")


@cli.command(name="fit-priors")
@click.option("--paths", "paths_location", required=True, type=click.Path(exists=True), help="Scan path file or dir")
@click.option("--tokens", "tokens_path", required=True, type=click.Path(exists=True), help="Stimulus token map")
@click.option("--output", "-o", required=True, type=click.Path(), help="Output priors file")
@click.pass_context
@report_errors
def fit_priors(ctx, paths_location, tokens_path, output):
    """Fit per-class Beta priors from scan paths."""
    cfg = resolve_run_config(ctx)
    with pipeline_stage("salience_model"):
        token_map = alignment_for(cfg).load_stimulus(tokens_path)
        service = SalienceService(cfg.taxonomy)
        prior_set = service.fit_prior_set(load_scan_paths(paths_location), token_map)
        service.save(prior_set, output)
    click.echo(f"[OK] Priors for {len(prior_set.modes())} modes -> {output}")


@cli.command(name="fit-transitions")
@click.option("--paths", "paths_location", required=True, type=click.Path(exists=True), help="Scan path file or dir")
@click.option("--tokens", "tokens_path", required=True, type=click.Path(exists=True), help="Stimulus token map")
@click.option("--prune-threshold", type=int, help="Minimum n-gram count kept")
@click.option("--output", "-o", required=True, type=click.Path(), help="Output tables file")
@click.pass_context
@report_errors
def fit_transitions(ctx, paths_location, tokens_path, prune_threshold, output):
    """Build pruned bigram/trigram tables and the n-gram index."""
    cfg = resolve_run_config(ctx, prune_threshold=prune_threshold)
    with pipeline_stage("transition_model"):
        token_map = alignment_for(cfg).load_stimulus(tokens_path)
        service = TransitionService(cfg.taxonomy, cfg.prune_threshold)
        fitted = service.fit_modes(load_scan_paths(paths_location), token_map)
        service.save(fitted, output)
    tables, index = fitted[cfg.mode]
    click.echo(f"[OK] {len(tables.p2)} bigrams, {len(tables.p3)} trigrams, index size {len(index)} -> {output}")


@cli.command(name="gen-pseudo")
@click.option("--tokens", "tokens_paths", required=True, multiple=True, type=click.Path(exists=True),
              help="Token map or .java file per example; repeat for more examples")
@click.option("--priors", "priors_path", required=True, type=click.Path(), help="Priors file")
@click.option("--tables", "tables_path", required=True, type=click.Path(), help="Tables file")
@click.option("--mode", type=MODE_CHOICE, help="Session mode")
@click.option("--seed", type=int, help="Sampling seed")
@click.option("--output", "-o", required=True, type=click.Path(), help="Output pseudo file")
@click.pass_context
@report_errors
def gen_pseudo(ctx, tokens_paths, priors_path, tables_path, mode, seed, output):
    """Sample attention masks and pseudo scan paths for training examples."""
    cfg = resolve_run_config(ctx, mode=mode, seed=seed)
    alignment = alignment_for(cfg)
    with pipeline_stage("pseudo_attention"):
        token_maps = load_token_maps(alignment, tokens_paths)
        priors = SalienceService.load(priors_path)
        tables, index = TransitionService.load(tables_path)[cfg.mode]
    mask_config = MaskConfig(cfg.mode, cfg.line_span(cfg.mode), cfg.seed)
    service = PseudoAttentionService(cfg.ablation())
    examples = []
    for example_id, token_map in enumerate(token_maps):
        with pipeline_stage("pseudo_attention", example_id):
            examples.append(service.generate_example(token_map, priors, tables, index, mask_config, example_id))
    service.save(examples, mask_config, output)
    click.echo(f"[OK] {len(examples)} pseudo examples ({cfg.mode.value}, seed {cfg.seed}) -> {output}")


@cli.command()
@click.option("--pseudo", "pseudo_path", required=True, type=click.Path(), help="Pseudo file")
@click.option("--priors", "priors_path", required=True, type=click.Path(), help="Priors file")
@click.option("--shards", "shards_path", type=click.Path(), help="Shard map file")
@click.option("--tokens", "tokens_paths", multiple=True, type=click.Path(exists=True),
              help="Token maps to tokenize when no shard file is given")
@click.option("--tokenizer", type=TOKENIZER_CHOICE, help="Shard tokenizer")
@click.option("--w-base", type=float, help="Base weight of every token")
@click.option("--mode", type=MODE_CHOICE, help="Session mode (default: the pseudo file's mode)")
@click.option("--output", "-o", required=True, type=click.Path(), help="Output weights file (JSONL)")
@click.pass_context
@report_errors
def project(ctx, pseudo_path, priors_path, shards_path, tokens_paths, tokenizer, w_base, mode, output):
    """Compute AST token weights and project them onto subword shards."""
    if not shards_path and not tokens_paths:
        raise click.UsageError("Provide --shards or at least one --tokens file")
    cfg = resolve_run_config(ctx, w_base=w_base, tokenizer=tokenizer, mode=mode)
    with pipeline_stage("weight_projection"):
        pseudo_mode, _, examples = PseudoAttentionService.load(pseudo_path)
        priors = SalienceService.load(priors_path)
        options: Dict[str, Any] = {}
        if cfg.tokenizer == "tiktoken":
            options["encoding_name"] = cfg.tiktoken_encoding
        shard_tokenizer = TokenizerFactory.create(cfg.tokenizer, **options)
        service = WeightProjectionService(shard_tokenizer, cfg.w_base, cfg.ablation())
        if shards_path:
            shard_maps = WeightProjectionService.load_shards(shards_path)
            token_maps = None
        else:
            token_maps = dict(enumerate(load_token_maps(alignment_for(cfg), tokens_paths)))
            shard_maps = {
                example_id: service.shard_map(token_map, example_id) for example_id, token_map in token_maps.items()
            }
        vectors = service.project_examples(
            examples, priors, shard_maps, SessionMode(mode) if mode else pseudo_mode, token_maps
        )
        written = service.save_weights(vectors, output)
    click.echo(f"[OK] {len(vectors)} weight vectors ({written} bytes) -> {output}")


@cli.command(name="eval-loss")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True), help="Loss input file")
@click.option("--beta", type=float, help="DPO temperature")
@click.option("--gamma", type=float, help="DPO mixing weight")
@click.option("--reduction", type=click.Choice(["sum", "mean"]), default="sum", help="SFT reduction")
@click.option("--check-grad", is_flag=True, help="Run the finite-difference gradient check")
@click.option("--output", "-o", required=True, type=click.Path(), help="Output report file")
@click.pass_context
@report_errors
def eval_loss(ctx, input_path, beta, gamma, reduction, check_grad, output):
    """Evaluate the weighted SFT, DPO and combined objectives on a batch."""
    cfg = resolve_run_config(ctx, dpo_beta=beta, dpo_gamma=gamma)
    engine = LossEngine(DpoConfig(beta_kl=cfg.dpo_beta, gamma=cfg.dpo_gamma), reduction=reduction)
    examples, pairs = engine.load_batch(input_path)
    report = engine.evaluate_batch(examples, pairs, check_grad=check_grad)
    write_json(report.to_dict(), output)
    click.echo(f"[OK] sft={report.sft:.6g} dpo={report.dpo:.6g} combined={report.combined:.6g} -> {output}")


@cli.command(name="attn-metrics")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True), help="Attention file")
@click.option("--k", "recency_k", type=int, help="Recency window (overrides the file)")
@click.option("--csv", "csv_path", type=click.Path(), help="Also export the rows as long-form CSV")
@click.option("--output", "-o", required=True, type=click.Path(), help="Output metrics file")
@report_errors
def attn_metrics(input_path, recency_k, csv_path, output):
    """Compute GCS, RFS, AFS and entropy for attention rows."""
    service = AttentionMetricsService(settings.attention_k)
    rows, critical, k, logprobs = rows_from_payload(load_artifact_payload(input_path, artifact_name="attention"))
    report = service.summarize(rows, critical, recency_k or k, logprobs)
    write_json(report.to_dict(), output)
    if csv_path:
        service.export_rows_csv(rows, csv_path)
    click.echo(f"[OK] {report.rows} rows, rfs={report.rfs:.6g} entropy={report.entropy:.6g} -> {output}")


@cli.command()
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True, file_okay=False), help="Gaze corpus directory")
@click.option("--examples", "examples_dir", type=click.Path(exists=True, file_okay=False), help="Training snippets")
@click.option("--mode", type=MODE_CHOICE, help="Session mode")
@click.option("--seed", type=int, help="Master seed")
@click.option("--tokenizer", type=TOKENIZER_CHOICE, help="Shard tokenizer")
@click.option("--w-base", type=float, help="Base weight of every token")
@click.option("--prune-threshold", type=int, help="Minimum n-gram count kept")
@click.option("--ablate", multiple=True, type=click.Choice(sorted(ABLATIONS)), help="Disable one weight component")
@click.option("--output", "-o", type=click.Path(file_okay=False), help="Bundle directory")
@click.pass_context
@report_errors
def run(ctx, corpus_dir, examples_dir, mode, seed, tokenizer, w_base, prune_threshold, ablate, output):
    """Run the full pipeline on a corpus (default: the bundled mini-corpus)."""
    overrides: Dict[str, Any] = {
        "corpus_dir": corpus_dir,
        "examples_dir": examples_dir,
        "mode": mode,
        "seed": seed,
        "tokenizer": tokenizer,
        "w_base": w_base,
        "prune_threshold": prune_threshold,
    }
    for name in ablate:
        overrides[ABLATIONS[name]] = False
    file_output = load_config_file(ctx.obj["config"]).get("output_dir") if ctx.obj.get("config") else None
    overrides["output_dir"] = get_output_directory(output or file_output)
    cfg = resolve_run_config(ctx, **overrides)
    bundle = PipelineService(cfg).run()
    click.echo(f"[OK] Bundle written to {bundle.output_dir}")
    click.echo(f"   Config hash: {bundle.manifest['config_hash']}")
    click.echo(f"   Total size: {bundle.total_bytes:,} bytes")


@cli.command()
@click.argument("bundle_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--output", "-o", type=click.Path(), help="Write the report as JSON")
@report_errors
def validate(bundle_dir, output):
    """Re-check the invariants of an artifact bundle."""
    report = ArtifactValidationService(bundle_dir).validate()
    for check in report.checks:
        status = "[OK]  " if check.passed else "[FAIL]"
        suffix = f" - {check.detail}" if check.detail else ""
        click.echo(f"{status} {check.name}{suffix}")
    if output:
        write_json(report.to_dict(), output)
    if not report.passed:
        click.echo(f"[ERROR] {len(report.failures())} of {len(report.checks)} checks failed", err=True)
        sys.exit(EXIT_DATA)
    click.echo(f"[OK] All {len(report.checks)} checks passed")


def main():
    """Main CLI entry point."""
    cli()


if __name__ == "__main__":
    main()
