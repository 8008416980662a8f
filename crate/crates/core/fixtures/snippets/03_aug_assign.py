count += 1
balance -= fee
scale *= 2
ratio /= n
