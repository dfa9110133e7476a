"""Command-line entry point.

Exit codes: 0 success, 1 check or threshold failure, 2 usage/environment
error, 3 scripted-provider miss. Machine output goes to stdout as JSON;
diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from . import demo
from .config import RuntimeConfig, build_config
from .evalsim import EvalAbort, generate_dialogues, load_scenarios, run_eval
from .model import Diagnostic, SpecBundle, errors as error_diags
from .parser import load_bundle
from .prompts import (
    FewShotExample,
    PromptBudgetError,
    compile_gca_prompt,
    compile_orchestrator_prompt,
    compile_tca_prompt,
    extract_routing_cues,
)
from .providers import ProviderBinding, ScriptMissError, http_provider, load_script
from .registry import registry_from_bundle
from .rpc import RpcToolClient
from .runtime import AgentRuntime
from .serializer import serialize_tool_spec
from .server import create_server
from .versioning import SnapshotNotFoundError, SnapshotStore, content_id, diff_snapshots

OK, CHECK_FAILED, USAGE_ERROR, PROVIDER_MISS = 0, 1, 2, 3


def _print_diags(diags: list[Diagnostic]) -> None:
    for diag in diags:
        print(str(diag), file=sys.stderr)


def _read_documents(spec_dir: str) -> list[tuple[str, str]]:
    root = Path(spec_dir) if spec_dir else demo.SPEC_DIR
    if not root.is_dir():
        raise FileNotFoundError(f"spec directory not found: {root}")
    return demo.read_spec_dir(root)


def _load_bundle(config: RuntimeConfig) -> tuple[Optional[SpecBundle], list[Diagnostic]]:
    documents = _read_documents(config.spec_dir)
    label = content_id(dict(documents))[:12]
    domain = Path(config.spec_dir).name if config.spec_dir else demo.DEMO_DOMAIN
    return load_bundle(documents, domain, version_label=label)


def _make_provider(config: RuntimeConfig) -> Optional[ProviderBinding]:
    if config.provider == "none":
        return None
    if config.provider == "scripted":
        return load_script(config.provider_script or str(demo.PROVIDER_SCRIPT_PATH))
    if config.provider == "http":
        if not config.provider_url:
            raise ValueError("http provider requires provider_url")
        return http_provider(config.provider_url, config.provider_model, config.provider_token_env)
    raise ValueError(f"unknown provider kind {config.provider!r}")


def _make_registry(config: RuntimeConfig, bundle: SpecBundle):
    if config.registry == "rpc":
        return RpcToolClient(config.registry_addr)
    machines = demo.load_machines(config.fixture or demo.MACHINES_PATH)
    return registry_from_bundle(bundle, demo.demo_handlers(machines), version=bundle.version_label)


def _make_runtime(config: RuntimeConfig) -> AgentRuntime:
    bundle, diags = _load_bundle(config)
    _print_diags(error_diags(diags))
    if bundle is None:
        raise ValueError("spec bundle failed validation; run 'specagent validate' for details")
    return AgentRuntime(bundle, _make_registry(config, bundle), _make_provider(config), config)


# -- subcommands ---------------------------------------------------------------

def cmd_validate(config: RuntimeConfig, args: argparse.Namespace) -> int:
    try:
        documents = _read_documents(config.spec_dir)
    except (OSError, FileNotFoundError) as exc:
        print(str(exc), file=sys.stderr)
        return USAGE_ERROR
    domain = Path(config.spec_dir or str(demo.SPEC_DIR)).name
    bundle, diags = load_bundle(documents, domain)
    _print_diags(diags)
    if bundle is None or error_diags(diags):
        return CHECK_FAILED
    print(json.dumps({"tools": bundle.tool_names(), "documents": len(documents)}))
    return OK


def _examples_from_scenarios(path: str) -> list[FewShotExample]:
    _, scenarios = load_scenarios(path)
    examples = []
    for scenario in scenarios:
        for turn in scenario.turns:
            if turn.gold_tool and turn.gold_args is not None:
                examples.append(
                    FewShotExample(turn.utterance, turn.gold_tool, turn.gold_args)
                )
    return examples


def cmd_compile(config: RuntimeConfig, args: argparse.Namespace) -> int:
    bundle, diags = _load_bundle(config)
    _print_diags(diags)
    if bundle is None:
        return CHECK_FAILED
    try:
        if args.agent == "tca":
            examples = _examples_from_scenarios(args.examples) if args.examples else []
            prompt = compile_tca_prompt(bundle, examples, args.max_examples, args.budget)
        elif args.agent == "orchestrator":
            prompt = compile_orchestrator_prompt(extract_routing_cues(bundle, config.stop_words))
        else:
            prompt = compile_gca_prompt(config.gca_policy)
    except PromptBudgetError as exc:
        print(str(exc), file=sys.stderr)
        return CHECK_FAILED
    print(prompt.text)
    return OK


def cmd_snapshot(config: RuntimeConfig, args: argparse.Namespace) -> int:
    try:
        documents = dict(_read_documents(config.spec_dir))
    except (OSError, FileNotFoundError) as exc:
        print(str(exc), file=sys.stderr)
        return USAGE_ERROR
    bundle, diags = load_bundle(list(documents.items()), "snapshot-check")
    if bundle is None and not args.force:
        _print_diags(diags)
        print("documents do not form a valid bundle; use --force to store anyway", file=sys.stderr)
        return CHECK_FAILED
    if bundle is None:
        _print_diags(diags)
    store = SnapshotStore(config.store)
    snap = store.snapshot(documents, label=args.label or "")
    print(json.dumps({"id": snap.id, "created_at": snap.created_at, "label": snap.label}))
    return OK


def cmd_diff(config: RuntimeConfig, args: argparse.Namespace) -> int:
    store = SnapshotStore(config.store)
    try:
        a, b = store.load(args.id_a), store.load(args.id_b)
    except SnapshotNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return USAGE_ERROR
    diff = diff_snapshots(a, b)
    print(
        json.dumps(
            {
                "added_tools": diff.added_tools,
                "removed_tools": diff.removed_tools,
                "changed": [vars(c) for c in diff.changed],
                "warnings": diff.warnings,
            },
            indent=2,
        )
    )
    return OK


def cmd_rollback(config: RuntimeConfig, args: argparse.Namespace) -> int:
    store = SnapshotStore(config.store)
    try:
        documents = store.rollback(args.id, args.out)
    except SnapshotNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return USAGE_ERROR
    print(json.dumps({"restored": len(documents), "out": args.out}))
    return OK


def cmd_serve(config: RuntimeConfig, args: argparse.Namespace) -> int:
    try:
        runtime = _make_runtime(config)
    except (ValueError, OSError, FileNotFoundError) as exc:
        print(str(exc), file=sys.stderr)
        return USAGE_ERROR
    server = create_server(runtime, config.addr, config.ui_dir or None)
    host, port = server.server_address[:2]
    print(json.dumps({"serving": f"http://{host}:{port}", "ui": bool(config.ui_dir)}), file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return OK


def cmd_chat(config: RuntimeConfig, args: argparse.Namespace) -> int:
    try:
        runtime = _make_runtime(config)
    except (ValueError, OSError, FileNotFoundError) as exc:
        print(str(exc), file=sys.stderr)
        return USAGE_ERROR
    session = runtime.create_session()
    print("chat ready; empty line re-prompts, EOF ends", file=sys.stderr)
    while True:
        print("> ", end="", file=sys.stderr, flush=True)
        line = sys.stdin.readline()
        if not line:
            return OK
        text = line.strip()
        if not text:
            continue
        try:
            answer, trace = runtime.run_turn(session, text)
        except ScriptMissError as exc:
            print(str(exc), file=sys.stderr)
            return PROVIDER_MISS
        print(answer)
        if args.trace:
            print(json.dumps(trace.to_dict(), sort_keys=True, default=str))


def cmd_eval(config: RuntimeConfig, args: argparse.Namespace) -> int:
    if not Path(args.scenarios).is_file():
        print(f"scenario file not found: {args.scenarios}", file=sys.stderr)
        return USAGE_ERROR
    bundle, diags = _load_bundle(config)
    _print_diags(error_diags(diags))
    if bundle is None:
        return CHECK_FAILED
    suite, scenarios = load_scenarios(args.scenarios)
    try:
        report = run_eval(
            bundle,
            scenarios,
            _make_provider(config),
            _make_registry(config, bundle),
            suite,
            config,
        )
    except EvalAbort as exc:
        print(str(exc), file=sys.stderr)
        return PROVIDER_MISS
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    failed = []
    if report.endpoint_accuracy.ratio < args.min_endpoint:
        failed.append(f"endpoint_accuracy {report.endpoint_accuracy.ratio:.4f} < {args.min_endpoint}")
    if report.slot_accuracy_strict.ratio < args.min_slot_strict:
        failed.append(f"slot_accuracy_strict {report.slot_accuracy_strict.ratio:.4f} < {args.min_slot_strict}")
    for message in failed:
        print(message, file=sys.stderr)
    return CHECK_FAILED if failed else OK


def cmd_simulate(config: RuntimeConfig, args: argparse.Namespace) -> int:
    if not Path(args.scenarios).is_file():
        print(f"scenario file not found: {args.scenarios}", file=sys.stderr)
        return USAGE_ERROR
    bundle, diags = _load_bundle(config)
    _print_diags(error_diags(diags))
    if bundle is None:
        return CHECK_FAILED
    _, scenarios = load_scenarios(args.scenarios)
    written = 0
    try:
        with open(args.out, "w", encoding="utf-8") as sink:
            written = generate_dialogues(
                bundle, scenarios, _make_provider(config), _make_registry(config, bundle), sink, config
            )
    except EvalAbort as exc:
        print(str(exc), file=sys.stderr)
        return PROVIDER_MISS
    except OSError as exc:
        print(f"dialogue sink failed after {written} dialogues: {exc}", file=sys.stderr)
        return USAGE_ERROR
    print(json.dumps({"dialogues": written, "out": args.out}))
    return OK


def cmd_show(config: RuntimeConfig, args: argparse.Namespace) -> int:
    bundle, _ = _load_bundle(config)
    if bundle is None:
        return CHECK_FAILED
    tool = bundle.tool(args.tool)
    if tool is None:
        print(f"unknown tool {args.tool!r}", file=sys.stderr)
        return USAGE_ERROR
    print(serialize_tool_spec(tool))
    return OK


# -- argument parsing ------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specagent", description=__doc__)
    parser.add_argument("--config", help="path to a key = value config file")
    parser.add_argument("--spec-dir", help="directory of tool spec documents (default: bundled demo)")
    parser.add_argument("--store", help="snapshot store directory")
    parser.add_argument("--provider", choices=["none", "scripted", "http"], help="chat provider kind")
    parser.add_argument("--provider-script", help="path to a scripted provider table (JSON)")
    parser.add_argument("--provider-url", help="chat-completion endpoint for the http provider")
    parser.add_argument("--provider-model", help="model name for the http provider")
    parser.add_argument("--fixture", help="machine table JSON backing the demo handlers")
    parser.add_argument("--registry", choices=["in_process", "rpc"], help="tool registry mode")
    parser.add_argument("--registry-addr", help="base URL of a remote /rpc tool server")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and cross-check a spec directory")
    p.add_argument("spec_dir", nargs="?", help="directory to validate (default: configured spec dir)")

    p = sub.add_parser("compile", help="emit an agent system prompt")
    p.add_argument("spec_dir", nargs="?", help="spec directory (default: configured)")
    p.add_argument("--agent", choices=["tca", "orchestrator", "gca"], required=True)
    p.add_argument("--max-examples", type=int, default=2)
    p.add_argument("--budget", type=int, default=None, help="character budget for the tca prompt")
    p.add_argument("--examples", help="scenario file to draw demonstrations from")

    p = sub.add_parser("snapshot", help="store a content-addressed snapshot")
    p.add_argument("spec_dir", nargs="?")
    p.add_argument("--label")
    p.add_argument("--force", action="store_true", help="store even if the bundle does not validate")

    p = sub.add_parser("diff", help="section-level differences between two snapshots")
    p.add_argument("id_a")
    p.add_argument("id_b")

    p = sub.add_parser("rollback", help="restore a snapshot into a directory")
    p.add_argument("id")
    p.add_argument("--out", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--addr", help="host:port to bind (default 127.0.0.1:8321)")
    p.add_argument("--ui-dir", help="static console files served under /ui")

    p = sub.add_parser("chat", help="interactive chat on stdin/stdout")
    p.add_argument("--trace", action="store_true", help="print each turn's trace as JSON")

    p = sub.add_parser("eval", help="score the runtime against gold scenarios")
    p.add_argument("scenarios")
    p.add_argument("--min-endpoint", type=float, default=1.0)
    p.add_argument("--min-slot-strict", type=float, default=0.95)

    p = sub.add_parser("simulate", help="generate dialogue traces from scenarios")
    p.add_argument("scenarios")
    p.add_argument("--out", required=True)

    p = sub.add_parser("show", help="print one tool's spec in canonical form")
    p.add_argument("tool")

    return parser


_COMMANDS = {
    "validate": cmd_validate,
    "compile": cmd_compile,
    "snapshot": cmd_snapshot,
    "diff": cmd_diff,
    "rollback": cmd_rollback,
    "serve": cmd_serve,
    "chat": cmd_chat,
    "eval": cmd_eval,
    "simulate": cmd_simulate,
    "show": cmd_show,
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    flag_values = {
        "spec_dir": getattr(args, "spec_dir", None),
        "store": args.store,
        "provider": args.provider,
        "provider_script": args.provider_script,
        "provider_url": args.provider_url,
        "provider_model": args.provider_model,
        "fixture": args.fixture,
        "registry": args.registry,
        "registry_addr": args.registry_addr,
        "addr": getattr(args, "addr", None),
        "ui_dir": getattr(args, "ui_dir", None),
    }
    try:
        config = build_config(args.config, flag_values)
    except (ValueError, OSError) as exc:
        print(str(exc), file=sys.stderr)
        return USAGE_ERROR
    try:
        return _COMMANDS[args.command](config, args)
    except BrokenPipeError:
        return OK


if __name__ == "__main__":
    sys.exit(main())
