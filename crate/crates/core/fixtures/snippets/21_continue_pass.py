for x in data:
    if x is None:
        continue
    pass
