"""Thin wrapper over the git command line (plumbing commands only)."""
from __future__ import annotations

import os
import subprocess
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

GIT_ENV = {"GIT_CONFIG_NOSYSTEM": "1", "LC_ALL": "C", "GIT_TERMINAL_PROMPT": "0"}


class GitError(OSError):
    pass


class UnknownCommit(LookupError):
    pass


@dataclass
class RawCommit:
    sha: str
    parents: list[str]
    author_name: str
    author_email: str
    timestamp: int
    tz_offset_minutes: int
    message: str


@dataclass
class RawChange:
    status: str  # A, M, D, R, T
    old_mode: str
    new_mode: str
    old_blob: str
    new_blob: str
    old_path: Optional[str]
    new_path: Optional[str]


def _tz_minutes(offset: str) -> int:
    sign = -1 if offset.startswith("-") else 1
    digits = offset.lstrip("+-").rjust(4, "0")
    return sign * (int(digits[:2]) * 60 + int(digits[2:4]))


class GitRepo:
    def __init__(self, path):
        self.path = Path(path)
        if not self.path.is_dir():
            raise GitError(f"{path} is not a directory")
        self._env = {**os.environ, **GIT_ENV}
        try:
            self.git_dir = self.run("rev-parse", "--git-dir").decode().strip()
        except GitError as exc:
            raise GitError(f"{path} is not a readable git repository") from exc
        self._catfile: Optional[subprocess.Popen] = None

    def run(self, *args: str, check: bool = True) -> bytes:
        proc = subprocess.run(
            ["git", "-c", "core.quotepath=off", *args],
            cwd=self.path, env=self._env, stdout=subprocess.PIPE, stderr=subprocess.PIPE,
        )
        if check and proc.returncode != 0:
            raise GitError(f"git {' '.join(args)} failed: {proc.stderr.decode(errors='replace').strip()}")
        return proc.stdout

    def close(self) -> None:
        if self._catfile is not None:
            self._catfile.stdin.close()
            self._catfile.wait()
            self._catfile = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- refs and history --

    def head_resolves(self) -> bool:
        return bool(self.run("rev-parse", "--verify", "-q", "HEAD^{commit}", check=False).strip())

    def branches(self) -> dict[str, str]:
        out = self.run("for-each-ref", "--format=%(objectname) %(refname:short)", "refs/heads").decode()
        result = {}
        for line in out.splitlines():
            sha, _, name = line.partition(" ")
            result[name] = sha
        return result

    def history_refs(self) -> list[str]:
        refs = ["--branches"]
        if self.head_resolves():
            refs.append("HEAD")
        return refs

    def log(self, refs: Optional[list[str]] = None) -> list[RawCommit]:
        """All commits reachable from ``refs``, parents before children."""
        refs = refs if refs is not None else self.history_refs()
        if refs == ["--branches"] and not self.branches():
            return []
        fmt = "%H%x1f%P%x1f%an%x1f%ae%x1f%ad%x1f%B"
        out = self.run("log", "-z", "--topo-order", "--reverse", "--date=raw", f"--format={fmt}", *refs, "--")
        commits = []
        for record in out.decode("utf-8", errors="replace").split("\0"):
            if not record:
                continue
            sha, parents, name, email, date, message = record.split("\x1f", 5)
            stamp, _, offset = date.partition(" ")
            commits.append(RawCommit(
                sha=sha.strip(),
                parents=parents.split(),
                author_name=name,
                author_email=email,
                timestamp=int(stamp),
                tz_offset_minutes=_tz_minutes(offset or "+0000"),
                message=message.rstrip("\n"),
            ))
        return commits

    def commit(self, sha: str) -> RawCommit:
        if not self.run("rev-parse", "--verify", "-q", f"{sha}^{{commit}}", check=False).strip():
            raise UnknownCommit(sha)
        return self.log([sha, "-n", "1"])[0]

    def rev_list(self, ref: str) -> list[str]:
        return self.run("rev-list", ref, "--").decode().split()

    def containing_branches(self, sha: str) -> list[str]:
        out = self.run("for-each-ref", "--contains", sha, "--format=%(refname:short)", "refs/heads").decode()
        return sorted(out.split())

    # -- diffs --

    def _diff_args(self, sha: str, parent: Optional[str]) -> list[str]:
        base = ["diff-tree", "-r", "-M", "--no-commit-id", "--no-ext-diff", "--no-textconv"]
        return base + ([parent, sha] if parent else ["--root", sha])

    def changes(self, sha: str, parent: Optional[str]) -> list[RawChange]:
        out = self.run(*self._diff_args(sha, parent), "--raw", "-z", "--no-abbrev")
        fields = out.decode("utf-8", errors="replace").split("\0")
        changes = []
        i = 0
        while i < len(fields):
            meta = fields[i]
            if not meta.startswith(":"):
                i += 1
                continue
            old_mode, new_mode, old_blob, new_blob, status = meta[1:].split(" ")
            letter = status[0]
            if letter in ("R", "C"):
                old_path, new_path = fields[i + 1], fields[i + 2]
                i += 3
            else:
                path = fields[i + 1]
                old_path = None if letter == "A" else path
                new_path = None if letter == "D" else path
                i += 2
            changes.append(RawChange(letter, old_mode, new_mode, old_blob, new_blob, old_path, new_path))
        return changes

    def patches(self, sha: str, parent: Optional[str]) -> list[str]:
        """Per-file unified diff sections, in the same order as :meth:`changes`."""
        out = self.run(*self._diff_args(sha, parent), "-p", "--no-color", "--full-index")
        text = out.decode("utf-8", errors="replace")
        sections: list[list[str]] = []
        for line in text.split("\n"):
            if line.startswith("diff --git "):
                sections.append([])
            if sections:
                sections[-1].append(line)
        return ["\n".join(s).rstrip("\n") + "\n" for s in sections]

    def patch_for(self, sha: str, parent: Optional[str], paths: list[str]) -> str:
        out = self.run(*self._diff_args(sha, parent), "-p", "--no-color", "--full-index", "--", *paths)
        return out.decode("utf-8", errors="replace")

    # -- blobs --

    def read_blob(self, blob: str) -> bytes:
        if self._catfile is None:
            self._catfile = subprocess.Popen(
                ["git", "cat-file", "--batch"], cwd=self.path, env=self._env,
                stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            )
        proc = self._catfile
        proc.stdin.write(blob.encode() + b"\n")
        proc.stdin.flush()
        header = proc.stdout.readline().decode().split()
        if len(header) < 3 or header[1] == "missing":
            raise GitError(f"blob {blob} missing")
        size = int(header[2])
        data = proc.stdout.read(size)
        proc.stdout.read(1)
        return data
