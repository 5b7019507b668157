"""Extraction of commits, files and methods from git repositories."""
from .cache import BundleCache
from .diff import attribute_method_changes, parse_patch
from .driller import DrillReport, branch_membership, drill, extract_commit, make_batches
from .git import GitError, GitRepo, UnknownCommit
from .metrics import MethodDecl, cyclomatic_complexity, detect_methods, file_nloc, language_for_path

__all__ = [
    "BundleCache",
    "DrillReport",
    "GitError",
    "GitRepo",
    "MethodDecl",
    "UnknownCommit",
    "attribute_method_changes",
    "branch_membership",
    "cyclomatic_complexity",
    "detect_methods",
    "drill",
    "extract_commit",
    "file_nloc",
    "language_for_path",
    "make_batches",
    "parse_patch",
]
