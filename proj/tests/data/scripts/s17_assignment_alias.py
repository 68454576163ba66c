import os
import subprocess

runner = subprocess.Popen
sysfn = os.system


def go(cmd):
    runner(cmd, shell=True)
    sysfn(cmd)
