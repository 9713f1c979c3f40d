"""Command-line client for the toolchain service.

The CLI owns no business logic: it loads local inputs, builds the same
request models the HTTP API accepts, dispatches them (in-process by
default, to a remote service with --server) and renders the response.
Exit codes: 0 success, 1 operational error, 2 contract violation
(round-trip divergence).
"""

from __future__ import annotations

import json
import os
import sys

import click

from .errors import DccError
from .model import MANIFEST_NAME, SourceTree

_ENDPOINTS = {
    "strip": "/strip",
    "derive": "/derive",
    "patch_forward": "/patch/forward",
    "patch_back": "/patch/back",
    "roundtrip": "/roundtrip",
    "select": "/select",
    "build_plan": "/build/plan",
    "build_sim": "/build/sim",
    "tailor": "/tailor",
    "scaffold": "/scaffold-soc",
    "pipeline": "/pipeline",
    "metrics_late": "/metrics/late",
    "metrics_lag": "/metrics/lag",
    "fixture": "/fixture",
}


class Client:
    """Dispatches request payloads either in-process or over HTTP."""

    def __init__(self, server: str | None = None):
        self.server = server.rstrip("/") if server else None

    def call(self, op: str, payload: dict) -> dict:
        if self.server is None:
            return self._local(op, payload)
        import httpx

        resp = httpx.post(self.server + _ENDPOINTS[op], json=payload, timeout=300.0)
        if resp.status_code != 200:
            detail = resp.json().get("detail", {})
            message = detail.get("message", resp.text) if isinstance(detail, dict) else str(detail)
            raise click.ClickException(message)
        return resp.json()

    def _local(self, op: str, payload: dict) -> dict:
        from .service import app as svc
        from .service import schemas as s

        handlers = {
            "strip": (svc.handle_strip, s.StripRequest),
            "derive": (svc.handle_derive, s.DeriveRequest),
            "patch_forward": (svc.handle_forward, s.PatchTranslateRequest),
            "patch_back": (svc.handle_port_back, s.PatchTranslateRequest),
            "roundtrip": (svc.handle_roundtrip, s.RoundtripRequest),
            "select": (svc.handle_select, s.SelectRequest),
            "build_plan": (svc.handle_build_plan, s.BuildPlanRequest),
            "build_sim": (svc.handle_build_sim, s.BuildSimRequest),
            "tailor": (svc.handle_tailor, s.TailorRequest),
            "scaffold": (svc.handle_scaffold, s.ScaffoldRequest),
            "pipeline": (svc.handle_pipeline, s.PipelineRequest),
            "metrics_late": (svc.handle_metrics_late, s.LateCommitRequest),
            "metrics_lag": (svc.handle_metrics_lag, s.MergeLagRequest),
            "fixture": (svc.handle_fixture, s.FixtureRequest),
        }
        handler, model = handlers[op]
        try:
            return handler(model(**payload)).model_dump()
        except DccError as e:
            raise click.ClickException(f"{type(e).__name__}: {e}")


class Ctx:
    def __init__(self, root: str, manifest: str | None, as_json: bool, server: str | None):
        self.root = root
        self.manifest_path = manifest or os.path.join(root, MANIFEST_NAME)
        self.as_json = as_json
        self.client = Client(server)

    def load_manifest_data(self) -> dict:
        try:
            with open(self.manifest_path, encoding="utf-8") as fh:
                return json.load(fh)
        except FileNotFoundError:
            raise click.ClickException(f"manifest not found: {self.manifest_path}")
        except json.JSONDecodeError as e:
            raise click.ClickException(f"manifest is not valid JSON: {e}")

    def load_manifest_text(self) -> str:
        with open(self.manifest_path, encoding="utf-8") as fh:
            return fh.read()

    def load_tree(self) -> dict[str, str]:
        try:
            return SourceTree.from_dir(self.root).to_data()
        except DccError as e:
            raise click.ClickException(str(e))

    def emit(self, data: dict, human: str | None = None) -> None:
        if self.as_json or human is None:
            click.echo(json.dumps(data, indent=2, sort_keys=True))
        else:
            click.echo(human)


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _write_out(out: str | None, text: str) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _write_tree(out_dir: str, tree: dict[str, str]) -> None:
    SourceTree(tree).write_dir(out_dir)


def _human_duration(sec: float) -> str:
    if sec >= 3600:
        return f"{sec / 3600:.2f}h"
    if sec >= 60:
        return f"{sec / 60:.1f}m"
    return f"{sec:.0f}s"


@click.group()
@click.option("--root", default=".", show_default=True, help="Source tree root.")
@click.option("--manifest", default=None, help=f"Manifest path (default <root>/{MANIFEST_NAME}).")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable stdout.")
@click.option("--server", default=None, envvar="DCC_SERVER",
              help="Base URL of a running dcc service; default runs in-process.")
@click.pass_context
def main(ctx, root, manifest, as_json, server):
    """Delivery-cost-control toolchain."""
    ctx.obj = Ctx(root, manifest, as_json, server)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host, port):
    """Run the toolchain service."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port)


@main.command()
@click.option("--out", default=None, help="Directory to write the derived subset into.")
@click.pass_obj
def derive(ctx: Ctx, out):
    """Derive the open-source-able subset of the tree."""
    resp = ctx.client.call("derive", {"tree": ctx.load_tree(),
                                      "manifest": ctx.load_manifest_data()})
    if out:
        _write_tree(out, resp["tree"])
    stripped = sum(len(v) for v in resp["strip_map"].values())
    ctx.emit(resp, f"derived {len(resp['tree'])} files "
                   f"({len(resp['strip_map'])} stripped, {stripped} regions)"
                   + (f" -> {out}" if out else ""))


@main.command()
@click.argument("file")
@click.option("--out", default=None, help="Write stripped content here instead of stdout.")
@click.pass_obj
def strip(ctx: Ctx, file, out):
    """Strip marked regions from one file."""
    manifest = ctx.load_manifest_data()
    resp = ctx.client.call("strip", {
        "content": _read(file),
        "marker_begin": manifest["marker"]["begin"],
        "marker_end": manifest["marker"]["end"]})
    if ctx.as_json:
        ctx.emit(resp)
    else:
        _write_out(out, resp["content"])


@main.group()
def patch():
    """Translate patches between the two development paths."""


@patch.command()
@click.option("--patch", "patch_file", required=True, help="Internal-path unified diff.")
@click.option("--out", default=None)
@click.pass_obj
def forward(ctx: Ctx, patch_file, out):
    """Internal commit -> public-subset patch."""
    resp = ctx.client.call("patch_forward", {
        "tree": ctx.load_tree(), "manifest": ctx.load_manifest_data(),
        "patch": _read(patch_file)})
    if ctx.as_json:
        ctx.emit(resp)
    else:
        _write_out(out, resp["patch"])


@patch.command()
@click.option("--patch", "patch_file", required=True, help="Community unified diff.")
@click.option("--out", default=None)
@click.pass_obj
def back(ctx: Ctx, patch_file, out):
    """Community patch -> internal-path patch."""
    resp = ctx.client.call("patch_back", {
        "tree": ctx.load_tree(), "manifest": ctx.load_manifest_data(),
        "patch": _read(patch_file)})
    if ctx.as_json:
        ctx.emit(resp)
    else:
        _write_out(out, resp["patch"])


@main.command("check-roundtrip")
@click.option("--patches", "patches_file", required=True,
              help="JSON-lines stream with kind and patch per line.")
@click.pass_obj
def check_roundtrip(ctx: Ctx, patches_file):
    """Replay a patch stream on both paths and report divergence."""
    entries = []
    for lineno, line in enumerate(_read(patches_file).splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as e:
            raise click.ClickException(f"{patches_file}:{lineno}: {e}")
        kind = data.get("kind", data.get("path_kind"))
        if kind not in ("internal", "open") or "patch" not in data:
            raise click.ClickException(
                f"{patches_file}:{lineno}: each line needs kind internal|open and a patch")
        entries.append({"kind": kind, "patch": data["patch"]})
    resp = ctx.client.call("roundtrip", {
        "tree": ctx.load_tree(), "manifest": ctx.load_manifest_data(),
        "patches": entries})
    if resp["clean"]:
        ctx.emit(resp, f"clean: {resp['steps_replayed']} steps, "
                       f"{len(resp['errors'])} skipped")
    else:
        ctx.emit(resp, f"DIVERGENCE at step {resp['divergence_step']}: "
                       + ", ".join(resp["divergent_paths"]))
        sys.exit(2)


@main.command()
@click.option("--diff", "diff_file", required=True, help="Commit diff to analyze.")
@click.pass_obj
def select(ctx: Ctx, diff_file):
    """Select the sufficient test set for a commit diff."""
    resp = ctx.client.call("select", {
        "tree": ctx.load_tree(), "manifest": ctx.load_manifest_data(),
        "diff": _read(diff_file)})
    ctx.emit(resp, f"{len(resp['tests'])} tests ({resp['reason']}), "
                   f"{_human_duration(resp['selected_cost_sec'])} of "
                   f"{_human_duration(resp['full_cost_sec'])} "
                   f"(ratio {resp['ratio']:.2f})")


@main.group()
def build():
    """Plan and simulate incremental modular builds."""


@build.command()
@click.pass_obj
def plan(ctx: Ctx):
    """Print the build task graph."""
    resp = ctx.client.call("build_plan", {"tree": ctx.load_tree(),
                                          "manifest": ctx.load_manifest_data()})
    lines = [f"{t['id']}: cost {t['cost_sec']}s, deps [{', '.join(t['deps'])}]"
             for t in resp["tasks"]]
    if resp["warnings"]:
        lines.append("warning, no owned files: " + ", ".join(resp["warnings"]))
    ctx.emit(resp, "\n".join(lines))


@build.command()
@click.option("--workers", default=1, show_default=True)
@click.option("--diff", "diff_file", default=None, help="Commit diff; omit for a clean check.")
@click.option("--cache", "cache_file", default=None, help="Cache file, read and updated.")
@click.option("--full", is_flag=True, help="Rebuild everything regardless of the diff.")
@click.pass_obj
def sim(ctx: Ctx, workers, diff_file, cache_file, full):
    """Simulate the incremental build on logical time."""
    cache = {}
    if cache_file and os.path.exists(cache_file):
        with open(cache_file, encoding="utf-8") as fh:
            cache = json.load(fh)
    resp = ctx.client.call("build_sim", {
        "tree": ctx.load_tree(), "manifest": ctx.load_manifest_data(),
        "diff": _read(diff_file) if diff_file else "", "workers": workers,
        "cache": cache, "full": full})
    if cache_file:
        with open(cache_file, "w", encoding="utf-8") as fh:
            json.dump(dict(sorted(resp["cache"].items())), fh, indent=2)
            fh.write("\n")
    speedup = resp["speedup"]
    ctx.emit(resp, f"{len(resp['dirty'])} dirty tasks, makespan "
                   f"{_human_duration(resp['makespan_sec'])} on {workers} workers "
                   f"(full rebuild {_human_duration(resp['monolithic_sec'])}, "
                   f"speedup {'clean' if speedup is None else f'{speedup:.2f}x'})")


@main.command()
@click.option("--config", "config_arg", required=True,
              help="Release config JSON, inline or @file.")
@click.option("--out", default=None, help="Directory to write the tailored tree into.")
@click.pass_obj
def tailor(ctx: Ctx, config_arg, out):
    """Produce the tailored tree for a release configuration."""
    raw = _read(config_arg[1:]) if config_arg.startswith("@") else config_arg
    try:
        config = json.loads(raw)
    except json.JSONDecodeError as e:
        raise click.ClickException(f"bad config JSON: {e}")
    resp = ctx.client.call("tailor", {
        "tree": ctx.load_tree(), "manifest": ctx.load_manifest_data(),
        "config": config})
    if out:
        _write_tree(out, resp["tree"])
    ctx.emit(resp, f"tailored tree: {len(resp['tree'])} files"
                   + (f" -> {out}" if out else ""))


@main.command("scaffold-soc")
@click.option("--id", "soc_id", required=True)
@click.option("--family", required=True)
@click.option("--apply", "do_apply", is_flag=True, help="Write the plan into the tree.")
@click.pass_obj
def scaffold_soc(ctx: Ctx, soc_id, family, do_apply):
    """Plan (and optionally apply) support files for a new SOC."""
    manifest_text = ctx.load_manifest_text()
    resp = ctx.client.call("scaffold", {
        "manifest": ctx.load_manifest_data(), "soc_id": soc_id, "family": family,
        "manifest_text": manifest_text, "tree": ctx.load_tree()})
    if do_apply:
        from .diffs import apply_patch, parse_patch

        for path, content in resp["creates"].items():
            full = os.path.join(ctx.root, *path.split("/"))
            os.makedirs(os.path.dirname(full), exist_ok=True)
            with open(full, "w", encoding="utf-8") as fh:
                fh.write(content)
        for path, patch_text in resp["edits"].items():
            base = SourceTree({path: manifest_text})
            try:
                patched = apply_patch(base, parse_patch(patch_text))
            except DccError as e:
                raise click.ClickException(str(e))
            with open(os.path.join(ctx.root, *path.split("/")), "w", encoding="utf-8") as fh:
                fh.write(patched[path])
    ctx.emit(resp, f"plan for {soc_id} (family {family}): "
                   f"{len(resp['creates'])} new files + {len(resp['edits'])} manifest edit, "
                   f"impact {resp['impact_count']} paths, cross-SOC overlap "
                   f"{resp['cross_soc_overlap'] or 'none'}"
                   + (" [applied]" if do_apply else ""))


@main.command()
@click.option("--diff", "diff_file", required=True)
@click.option("--workers", default=1, show_default=True)
@click.option("--commit-id", default="")
@click.pass_obj
def pipeline(ctx: Ctx, diff_file, workers, commit_id):
    """Run the full per-commit pipeline and report the feedback loop."""
    resp = ctx.client.call("pipeline", {
        "tree": ctx.load_tree(), "manifest": ctx.load_manifest_data(),
        "diff": _read(diff_file), "workers": workers, "commit_id": commit_id})
    ctx.emit(resp, f"feedback loop {_human_duration(resp['feedback_loop_sec'])} "
                   f"vs baseline {_human_duration(resp['baseline_loop_sec'])} "
                   f"(ratio {resp['ratio']:.2f}; build "
                   f"{_human_duration(resp['build_makespan_sec'])}, validation "
                   f"{_human_duration(resp['validation_cost_sec'])})")


@main.group()
def metrics():
    """Engineering KPIs over commit-history logs."""


@metrics.command()
@click.option("--history", "history_file", required=True, help="JSON-lines commit log.")
@click.option("--milestone", "milestones", multiple=True, required=True,
              help="ISO-8601 UTC instant; repeatable.")
@click.option("--window-days", default=14.0, show_default=True)
@click.pass_obj
def late(ctx: Ctx, history_file, milestones, window_days):
    """Fraction of commits landing just before a milestone."""
    history = [json.loads(line) for line in _read(history_file).splitlines() if line.strip()]
    resp = ctx.client.call("metrics_late", {
        "history": history, "milestones": list(milestones), "window_days": window_days})
    ctx.emit(resp, f"late-commit ratio {resp['ratio']:.3f} "
                   f"over {resp['total_commits']} commits")


@metrics.command()
@click.option("--history", "history_file", required=True, help="JSON-lines commit log.")
@click.pass_obj
def lag(ctx: Ctx, history_file):
    """Merge lag between the two development paths."""
    history = [json.loads(line) for line in _read(history_file).splitlines() if line.strip()]
    resp = ctx.client.call("metrics_lag", {"history": history})
    if resp["merged_count"] == 0:
        ctx.emit(resp, f"no merged commits ({resp['unmerged_count']} unmerged)")
    else:
        ctx.emit(resp, f"merge lag mean {_human_duration(resp['mean_sec'])}, "
                       f"median {_human_duration(resp['median_sec'])}, "
                       f"max {_human_duration(resp['max_sec'])} "
                       f"({resp['merged_count']} merged, {resp['unmerged_count']} unmerged)")


@main.command("gen-fixture")
@click.option("--seed", default=1, show_default=True)
@click.option("--out", "out_dir", required=True, help="Directory for tree/ and commits.jsonl.")
@click.option("--modules", default=None, type=int)
@click.option("--features", default=None, type=int)
@click.option("--tests", default=None, type=int)
@click.option("--targets", default=None, type=int)
@click.option("--commits", default=None, type=int)
@click.option("--community-ratio", default=None, type=float)
@click.pass_obj
def gen_fixture(ctx: Ctx, seed, out_dir, **params):
    """Generate a deterministic fixture repo plus commit stream."""
    clean = {k: v for k, v in params.items() if v is not None}
    resp = ctx.client.call("fixture", {"seed": seed, "params": clean})
    tree_dir = os.path.join(out_dir, "tree")
    _write_tree(tree_dir, resp["tree"])
    with open(os.path.join(tree_dir, MANIFEST_NAME), "w", encoding="utf-8") as fh:
        json.dump(resp["manifest"], fh, indent=2)
        fh.write("\n")
    with open(os.path.join(out_dir, "commits.jsonl"), "w", encoding="utf-8") as fh:
        for commit in resp["commits"]:
            fh.write(json.dumps(commit) + "\n")
    ctx.emit({"tree_files": len(resp["tree"]), "commits": len(resp["commits"]),
              "out": out_dir},
             f"fixture seed {seed}: {len(resp['tree'])} files, "
             f"{len(resp['commits'])} commits -> {out_dir}")


if __name__ == "__main__":
    main()
