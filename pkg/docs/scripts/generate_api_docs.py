from __future__ import annotations

import textwrap
from pathlib import Path

from pydoc_markdown import PydocMarkdown
from pydoc_markdown.contrib.loaders.python import PythonLoader
from pydoc_markdown.contrib.processors.crossref import CrossrefProcessor
from pydoc_markdown.contrib.processors.filter import FilterProcessor
from pydoc_markdown.contrib.processors.smart import SmartProcessor
from pydoc_markdown.contrib.renderers.markdown import MarkdownRenderer


API_MODULES: list[tuple[str, str, int]] = [
    # Simulation
    ("qstate", "Statevectors and subsystems", 10),
    ("gates", "Two-qubit gates and RNG streams", 20),
    ("metrics", "Asymmetry, variance and distances", 30),
    ("circuit", "Doped brick-wall circuits", 40),
    ("hamiltonian", "Spin-chain quenches", 50),
    # Analysis and output
    ("analysis", "Crossings, peaks and fits", 100),
    ("config", "Experiment configuration", 110),
    ("experiments", "Experiment drivers", 120),
    ("emit", "CSV output", 130),
    ("chart", "SVG charts", 140),
    ("errors", "Exceptions", 150),
]

ROOT = Path(__file__).resolve().parent.parent.parent  # qmpemba repo root
DOCS = ROOT / "docs"
OUT_DIR = DOCS / "api"


def generate_module_md(module_name: str) -> str:
    session = PydocMarkdown(
        loaders=[PythonLoader(modules=[f"qmpemba.{module_name}"], search_path=[str(ROOT)])],
        processors=[
            FilterProcessor(
                skip_empty_modules=False,
                documented_only=False,
                exclude_private=True,
                exclude_special=True,
                expression=(
                    "default() and obj.__class__.__name__ != 'Indirection' and "
                    "(not name.startswith('__') or name == '__init__')"
                ),
            ),
            SmartProcessor(),
            CrossrefProcessor(),
        ],
        renderer=MarkdownRenderer(
            render_module_header=True,
            render_toc=False,
            data_code_block=True,
        ),
    )
    modules = session.load_modules()
    session.process(modules)
    return session.renderer.render_to_string(modules)


def make_frontmatter(module_name: str, label: str, order: int) -> str:
    return "\n".join([
        "---",
        f"title: qmpemba.{module_name}",
        f"description: {label}.",
        f"order: {order}",
        "---",
    ])


def postprocess(body: str, module_name: str) -> str:
    out: list[str] = []
    for line in body.splitlines():
        if line.startswith("# qmpemba."):
            continue
        if line.strip() == f'<a id="qmpemba.{module_name}"></a>':
            continue
        out.append(line)

    while out and not out[0].strip():
        out.pop(0)

    return "\n".join(out) + "\n"


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    rows = []
    for module_name, label, order in API_MODULES:
        print(f"Generating docs for qmpemba.{module_name} ...")
        body = generate_module_md(module_name)
        if not body.strip():
            print("  SKIP (no output)")
            continue
        body = postprocess(body, module_name)
        content = make_frontmatter(module_name, label, order) + "\n\n" + body
        out_path = OUT_DIR / f"{module_name}.md"
        out_path.write_text(content, encoding="utf-8")
        rows.append(f"| [{module_name}]({module_name}.md) | {label} |")
        print(f"  -> {out_path.relative_to(ROOT)}")

    index_content = textwrap.dedent("""\
        ---
        title: API Reference
        description: Reference for the public qmpemba modules.
        order: 0
        ---

        | Module | Description |
        |--------|-------------|
    """) + "\n".join(rows) + "\n"
    index_path = OUT_DIR / "index.md"
    index_path.write_text(index_content, encoding="utf-8")
    print(f"  -> {index_path.relative_to(ROOT)}")
    print("Done.")


if __name__ == "__main__":
    main()
