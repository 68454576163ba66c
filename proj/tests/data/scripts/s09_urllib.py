import urllib.request
from urllib.request import Request, urlopen as uo


def fetch(url):
    a = urllib.request.urlopen(url)
    req = Request(url, headers={"User-Agent": "x"})
    return a, uo(req)
