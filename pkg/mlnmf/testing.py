#!/usr/bin/env python3

import logging
import os
import tempfile
from typing import Optional

from click.testing import CliRunner, Result
from expecttest import TestCase

from .config import set_config_path
from .main import cli


class CLIEndToEndTestCase(TestCase):
    """Base class for end-to-end tests driving the mlnmf CLI.

    Every test runs inside a fresh temporary directory, which is also the
    working directory (so no stray mlnmf.toml is picked up).
    """

    def setUp(self) -> None:
        super().setUp()
        self.temp_dir = tempfile.TemporaryDirectory()
        self._old_cwd = os.getcwd()
        os.chdir(self.temp_dir.name)
        self.runner = CliRunner()

    def tearDown(self) -> None:
        os.chdir(self._old_cwd)
        self.temp_dir.cleanup()
        super().tearDown()

    def path(self, *parts: str) -> str:
        """Absolute path inside the test directory."""
        return os.path.join(self.temp_dir.name, *parts)

    def normalize_path(self, text: str) -> str:
        """Replace the temporary directory in output text with a fixed placeholder."""
        return text.replace(self.temp_dir.name, "/tmp/test_dir")

    def invoke(self, *args: str) -> Result:
        """Invoke the CLI, restoring the root logger and the config path afterwards.

        configure_logging binds a handler to the runner's captured stderr,
        which is closed once the invocation returns, and --config pins a path
        relative to this test's directory.
        """
        root = logging.getLogger()
        handlers, level = list(root.handlers), root.level
        try:
            return self.runner.invoke(cli, list(args))
        finally:
            for handler in root.handlers:
                if handler not in handlers:
                    handler.close()
            root.handlers[:] = handlers
            root.setLevel(level)
            set_config_path(None)

    def invoke_assert_success(self, *args: str) -> str:
        """Invoke the CLI and assert exit code 0.

        Returns:
            The normalized stdout
        """
        result = self.invoke(*args)
        if result.exception is not None and not isinstance(
            result.exception, SystemExit
        ):
            raise result.exception
        self.assertEqual(
            result.exit_code,
            0,
            f"command {' '.join(args)} failed:\n{result.stderr}",
        )
        return self.normalize_path(result.stdout)

    def invoke_assert_error(self, *args: str, exit_code: Optional[int] = None) -> str:
        """Invoke the CLI and assert that it fails.

        Args:
            args: Command line arguments
            exit_code: The exact exit code expected, if any

        Returns:
            The "Error: ..." line from stderr (or the whole stderr when there
            is none), normalized
        """
        result = self.invoke(*args)
        self.assertNotEqual(result.exit_code, 0, f"command succeeded:\n{result.stdout}")
        if result.exception is not None and not isinstance(
            result.exception, SystemExit
        ):
            raise result.exception
        if exit_code is not None:
            self.assertEqual(result.exit_code, exit_code, result.stderr)
        errors = [line for line in result.stderr.splitlines() if line.startswith("Error")]
        return self.normalize_path(errors[-1] if errors else result.stderr)
