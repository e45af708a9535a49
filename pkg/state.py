"""
state.py - Session state for the road-field front analyzer

Holds what a single CLI session accumulates: the active run configuration,
log entries, the last emitted results and the debug-trace bookkeeping.
Numerical modules never read from here; they are pure functions of their
inputs. Only the CLI, the verification suite and utils.add_log_entry write.
"""

import os
import json
import logging
from datetime import datetime

STATE_FILE_VERSION = "1.0"

# === Session Variables ===
run_config = None  # dict form of main.RunConfig for the active command
log_entries = []
last_results = None
verification_reports = []

# === Debug Log Globals ===
debug_log_file = None
debug_log_counter = 0
debug_log_entries = 0
max_log_entries_per_file = 5000


def reset_state():
    """Reset session state for a new run"""
    global run_config, log_entries, last_results, verification_reports
    global debug_log_entries

    run_config = None
    log_entries = []
    last_results = None
    verification_reports = []
    debug_log_entries = 0


def save_run(save_path):
    """
    Save the current session to a JSON file

    Args:
        save_path: Destination file path

    Returns:
        bool: True if the file was written, False otherwise

    The document records the run configuration, the last results and the
    log entries so that a run can be audited or replayed with --config.
    """
    document = {
        "version": STATE_FILE_VERSION,
        "saved_at": datetime.now().isoformat(),
        "run_config": run_config,
        "results": last_results,
        "log_entries": log_entries,
    }
    try:
        directory = os.path.dirname(os.path.abspath(save_path))
        os.makedirs(directory, exist_ok=True)
        with open(save_path, 'w', encoding='utf-8') as f:
            json.dump(document, f, indent=2)
        return True
    except (OSError, TypeError) as e:
        logging.error(f"Error saving run state to {save_path}: {str(e)}")
        return False


def load_run(load_path):
    """Load a session saved by save_run; returns True on success"""
    global run_config, last_results, log_entries

    try:
        with open(load_path, 'r', encoding='utf-8') as f:
            document = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        logging.error(f"Error loading run state from {load_path}: {str(e)}")
        return False

    if document.get("version") != STATE_FILE_VERSION:
        logging.error(f"Unsupported run state version: {document.get('version')}")
        return False

    run_config = document.get("run_config")
    last_results = document.get("results")
    log_entries = list(document.get("log_entries", []))
    return True
