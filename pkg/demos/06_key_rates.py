"""Secret key rate against QBER for two, four and eight dimensions.

Higher dimensions carry more bits per photon and tolerate more errors
before the rate reaches zero.
"""

from timebin_qudits import key_rate_threshold, qber, secret_key_rate

for d in (2, 4, 8):
    print(f"d={d}: R(0) = {secret_key_rate(d, 0.0):.3f}, zero-rate QBER {100 * key_rate_threshold(d):.2f} %")

measured = [0.987, 0.984, 0.978, 0.986, 0.978, 0.948, 0.965, 0.945]
q = qber(measured, 4)
print(f"example fidelities -> QBER {100 * q:.2f} %, R = {secret_key_rate(4, q):.2f} bits per sifted photon")
