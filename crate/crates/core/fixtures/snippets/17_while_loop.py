i = 0
while i < n:
    i += 1
