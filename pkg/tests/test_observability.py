import logging
import unittest
from unittest import mock

from monitoring import observability
from monitoring.observability import configure_logging, flush_tracing


class TestFlushTracing(unittest.TestCase):
    def test_off_without_client(self):
        with mock.patch.object(observability, "langfuse", None):
            self.assertFalse(flush_tracing())

    def test_flushes_client(self):
        client = mock.Mock()
        with mock.patch.object(observability, "langfuse", client):
            self.assertTrue(flush_tracing())
        client.flush.assert_called_once_with()

    def test_flush_failure_is_logged(self):
        client = mock.Mock()
        client.flush.side_effect = RuntimeError("collector unreachable")
        with mock.patch.object(observability, "langfuse", client):
            with self.assertLogs("monitoring.observability", level="WARNING"):
                self.assertFalse(flush_tracing())


class TestConfigureLogging(unittest.TestCase):
    def tearDown(self):
        configure_logging("WARNING")

    def test_explicit_level(self):
        self.assertEqual(configure_logging("debug"), logging.DEBUG)

    def test_unknown_level_falls_back(self):
        self.assertEqual(configure_logging("chatty"), logging.INFO)

    def test_environment_level(self):
        with mock.patch.dict("os.environ", {"SITEVEC_LOG_LEVEL": "ERROR"}):
            self.assertEqual(configure_logging(), logging.ERROR)


if __name__ == "__main__":
    unittest.main()
