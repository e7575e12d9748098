import sys
from abc import abstractmethod

class OutputStream:
    """Abstract class for writing data (reports, traces, rows) to some
    output."""

    @abstractmethod
    def write(self, data):
        """Write data to some output.

        :data: data to write to output stream
        :returns: nothing
        """

    def close(self):
        pass

class FileOutput(OutputStream):
    """Output to a file (default: stdout). The specified file can be either a
    filename, in which case the file is opened for writing, or an already open
    file object."""

    def __init__(self, file=sys.stdout, newline=None):
        # Open file for writing in case of a string argument.
        if isinstance(file, str):
            self.file = open(file, "w", newline=newline)
            self.owned = True
        else:
            self.file = file
            self.owned = False

    def write(self, data):
        """Print data to self.file

        :data: data to print
        :returns: nothing

        """
        print(data, file=self.file)

    def write_raw(self, text):
        self.file.write(text)

    def close(self):
        if self.owned:
            self.file.close()
        else:
            self.file.flush()

class MemoryOutput(OutputStream):
    """Collects written data in a list"""

    def __init__(self):
        self.lines = []

    def write(self, data):
        self.lines.append(data)
