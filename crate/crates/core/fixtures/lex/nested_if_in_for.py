for x in xs:
    if x > 0:
        print(x)
    total += x
