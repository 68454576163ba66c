from os import *


def go(cmd):
    system(cmd)
    handle = popen("whoami")
    return getcwd(), handle
