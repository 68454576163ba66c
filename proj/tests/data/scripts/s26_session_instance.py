import requests


def upload(url, data):
    session = requests.Session()
    session.get(url)
    return session.post(url, data=data)
