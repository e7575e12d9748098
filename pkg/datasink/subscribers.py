import csv
import json
import math

import numpy as np

from datasink.output import OutputStream, FileOutput

def _jsonable(value):
    """json.dumps default hook for numpy values"""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if hasattr(value, "to_dict"):
        return value.to_dict()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")

def _finite(value):
    """Non-finite floats become strings so documents stay strict JSON"""
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    return value

def to_json(document, indent=None):
    """Canonical JSON: sorted keys, numpy values converted, no NaN literals"""
    plain = json.loads(json.dumps(document, default=_jsonable))
    return json.dumps(_finite(plain), sort_keys=True, indent=indent, allow_nan=False)

class Subscriber:
    """Abstract class that defines via what callback functions upper layers can
    receive results from the lab."""

    def on_report_received(self, report):
        pass

    def on_trace_received(self, record):
        pass

    def on_info_received(self, info_string):
        pass

    def on_exception_received(self, exception):
        pass

    def close(self):
        pass

class PrintSubscriber(Subscriber):
    """Default implementation of the Subscriber class that prints all the
    information to the specified output stream (default: stdout)"""

    def __init__(self, verbose=1, ostream=None):
        self.verbose_mode = verbose
        if ostream is None:
            self.ostream = FileOutput()
        else:
            self.ostream = ostream

    def on_report_received(self, report):
        """Print a one line summary of a report, the full document when
        verbose"""
        if self.verbose_mode > 1:
            self.ostream.write(to_json(report, indent=2))
            return
        summary = {k: report[k] for k in ("command", "passed", "error_constant", "zeta")
                   if k in report}
        self.ostream.write(" ".join(f"{k}={v}" for k, v in summary.items()) or "report")

    def on_trace_received(self, record):
        if self.verbose_mode > 1:
            self.ostream.write(to_json(record))

    def on_info_received(self, info):
        if self.verbose_mode > 0:
            self.ostream.write(info)

    def on_exception_received(self, exception):
        self.ostream.write(f"error: {exception}")

class JsonReportWriter(Subscriber):
    """Write the last received report as one JSON document"""

    def __init__(self, file):
        self.file = file
        self.written = 0

    def on_report_received(self, report):
        ostream = FileOutput(self.file)
        try:
            ostream.write(to_json(report, indent=2))
        finally:
            ostream.close()
        self.written += 1

class TraceWriter(Subscriber):
    """Write every trace record as a JSON line"""

    def __init__(self, file=None):
        self.ostream = file if isinstance(file, OutputStream) else FileOutput(file)

    def on_trace_received(self, record):
        self.ostream.write(to_json(record))

    def close(self):
        self.ostream.close()

class CsvRowWriter(Subscriber):
    """Write flat reports as RFC-4180 rows below a header. Fields missing from
    a report are left empty, extra fields are ignored."""

    def __init__(self, file, fieldnames):
        self.ostream = FileOutput(file, newline="")
        self.fieldnames = list(fieldnames)
        self.writer = csv.DictWriter(self.ostream.file, fieldnames=self.fieldnames,
                                     extrasaction="ignore", lineterminator="\r\n")
        # Header to the file
        self.writer.writeheader()

    def on_report_received(self, report):
        self.writer.writerow({k: _finite(v) for k, v in report.items()})

    def close(self):
        self.ostream.close()

class SubscriberSystem:
    """SubscriberSystem: collection of subscribers"""
    def __init__(self):
        self.subscribers = []

    def register_subscriber(self, subscriber: Subscriber):
        """Add a subscriber to the list

        :subscriber: Subscriber to register
        :returns: nothing

        """
        self.subscribers.append(subscriber)

    def send_report(self, report):
        for sub in self.subscribers:
            sub.on_report_received(report)

    def send_trace(self, record):
        for sub in self.subscribers:
            sub.on_trace_received(record)

    def send_info(self, info_string):
        for sub in self.subscribers:
            sub.on_info_received(info_string)

    def send_exception(self, exception):
        for sub in self.subscribers:
            sub.on_exception_received(exception)

    def close(self):
        for sub in self.subscribers:
            sub.close()
