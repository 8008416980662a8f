while n > 1:
    n = n // 2
else:
    print("done")
