for i in range(n):
    total += i
