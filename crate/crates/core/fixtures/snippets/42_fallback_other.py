with open(path) as f:
    data = f.read()
raise ValueError("bad")
