import base64

import rsa
from Crypto.Cipher import AES, DES
from cryptography.fernet import Fernet


def seal(key, data, pub, priv):
    a = AES.new(key, AES.MODE_ECB)
    d = DES.new(key[:8], DES.MODE_ECB)
    token = Fernet(key).encrypt(data)
    blob = rsa.encrypt(data, pub)
    plain = rsa.decrypt(blob, priv)
    return base64.b64encode(token), base64.b64decode(blob), a, d, plain
