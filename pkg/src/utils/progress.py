import os
import threading
import time
from typing import Optional
from colorama import Fore, Style, init

init(autoreset=True)


def _env_flag(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None:
        return default
    return raw.strip().lower() in ("1", "true", "yes", "on")


class ProgressTracker:
    def __init__(self, verbose: bool = True):
        self.start_time = None
        self.warnings = []
        self.verbose = verbose
        self._lock = threading.Lock()

    def start(self, title: str = "Starting coexistence lab run..."):
        """Start progress tracking"""
        self.start_time = time.time()
        self.warnings = []
        if self.verbose:
            print(f"{Fore.CYAN}{title}{Style.RESET_ALL}")

    def sorted_warnings(self) -> list:
        return sorted(self.warnings, key=lambda entry: (entry["stage"], entry["subject"] or "", entry["message"]))

    def stop(self):
        """Stop progress tracking"""
        if self.start_time:
            elapsed = time.time() - self.start_time
            if self.verbose:
                print(f"{Fore.GREEN}Run completed in {elapsed:.2f} seconds{Style.RESET_ALL}")
            self.start_time = None

    def update_status(self, stage: str, subject: Optional[str], status: str):
        """Report progress of a stage (subject: species, start index, sweep cell, ...)"""
        if self.verbose:
            subject_display = f" [{subject}]" if subject else ""
            print(f"{Fore.YELLOW}✓ {stage}{subject_display} {status}{Style.RESET_ALL}")

    def warn(self, stage: str, subject: Optional[str], message: str):
        """Record a non-fatal warning (degenerate bound, exploratory sweep, ...); repeats are dropped"""
        entry = {"stage": stage, "subject": subject, "message": message}
        with self._lock:
            if entry in self.warnings:
                return
            self.warnings.append(entry)
        if self.verbose:
            subject_display = f" [{subject}]" if subject else ""
            print(f"{Fore.MAGENTA}⚠ {stage}{subject_display} {message}{Style.RESET_ALL}")


# Global progress tracker instance
progress = ProgressTracker(verbose=_env_flag("LV_VERBOSE", True))
