#!/usr/bin/env python3
"""
Script to generate the CLI reference from the cheeger-gap Click commands.

Writes docs/docs/core/cli-commands.md; run it after changing any command or option.
"""

import re
import sys
from pathlib import Path

import click

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root / "python"))

from cheeger_gap.cli import cli  # noqa: E402

OUTPUT_FILE = project_root / "docs" / "docs" / "core" / "cli-commands.md"


def clean_usage_line(usage: str) -> str:
    """Replace the 'Usage: cli' prefix with the installed script name."""
    return usage.replace("Usage: cli ", "cheeger-gap ").replace("Usage: ", "")


def escape_pipes(text: str) -> str:
    """Pipes inside a Markdown table cell would end the cell."""
    return text.replace("|", "\\|")


def format_options_section(help_text: str) -> str:
    """Turn click's 'Options:' block into a Markdown table."""
    lines = help_text.split("\n")
    try:
        start = next(i for i, line in enumerate(lines) if line.strip() == "Options:")
    except StopIteration:
        return ""

    rows: list[tuple[str, list[str]]] = []
    for line in lines[start + 1 :]:
        if not line.strip():
            continue
        # A new option starts with exactly two spaces and a dash.
        if line.startswith("  -") and not line.startswith("   "):
            content = line[2:]
            match = re.search(r"\s{2,}", content)
            if match:
                rows.append(
                    (content[: match.start()].strip(), [content[match.end() :].strip()])
                )
            else:
                rows.append((content.strip(), []))
        elif rows:
            rows[-1][1].append(line.strip())

    if not rows:
        return ""
    table = ["| Option | Description |", "|--------|-------------|"]
    for option, description in rows:
        desc = escape_pipes(" ".join(description).strip())
        table.append(f"| `{option}` | {desc} |")
    return "\n".join(table) + "\n"


def extract_description(help_text: str) -> str:
    """The help text between the usage line and the options block."""
    description_lines: list[str] = []
    in_description = False
    for line in help_text.split("\n"):
        if line.startswith("Usage:"):
            in_description = True
            continue
        if line.strip() in ("Options:", "Commands:"):
            break
        if in_description:
            stripped = line.strip()
            if stripped or description_lines:
                description_lines.append(stripped)
    return "\n".join(description_lines).strip()


def generate_command_docs(cmd: click.Group) -> str:
    markdown_content = ["# CLI commands", ""]

    ctx = click.Context(cmd, info_name="cheeger-gap")
    group_help = cmd.get_help(ctx)
    markdown_content.append(extract_description(group_help))
    markdown_content.append("")
    markdown_content.append("**Global options:**")
    markdown_content.append("")
    markdown_content.append(format_options_section(group_help))

    for sub_cmd in sorted(cmd.commands.values(), key=lambda c: c.name or ""):
        sub_ctx = click.Context(sub_cmd, info_name=sub_cmd.name, parent=ctx)
        help_text = sub_cmd.get_help(sub_ctx)

        markdown_content.append(f"## `{sub_cmd.name}`")
        markdown_content.append("")
        description = extract_description(help_text)
        if description:
            markdown_content.append(description)
            markdown_content.append("")
        markdown_content.append("**Usage:**")
        markdown_content.append("")
        markdown_content.append("```bash")
        markdown_content.append(clean_usage_line(sub_cmd.get_usage(sub_ctx)))
        markdown_content.append("```")
        markdown_content.append("")
        options_section = format_options_section(help_text)
        if options_section:
            markdown_content.append("**Options:**")
            markdown_content.append("")
            markdown_content.append(options_section)

    return "\n".join(markdown_content)


def main() -> None:
    print("Generating cheeger-gap CLI documentation...")
    markdown_content = generate_command_docs(cli)

    if OUTPUT_FILE.exists() and OUTPUT_FILE.read_text(encoding="utf-8") == markdown_content:
        print(f"CLI documentation is up to date at: {OUTPUT_FILE}")
        return

    OUTPUT_FILE.parent.mkdir(parents=True, exist_ok=True)
    OUTPUT_FILE.write_text(markdown_content, encoding="utf-8")
    print(f"CLI documentation generated successfully at: {OUTPUT_FILE}")


if __name__ == "__main__":
    main()
