from pathlib import Path

from typegnn.frontend.syntax import SourceProject


def load_project(src_dir, project_id=None) -> SourceProject:
    """Read every ``.ts`` file under ``src_dir`` in sorted path order."""
    root = Path(src_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"not a directory: {root}")
    files = []
    for path in sorted(root.rglob("*.ts")):
        files.append((path.relative_to(root).as_posix(), path.read_text(encoding="utf-8")))
    return SourceProject(project_id or root.name, files)
