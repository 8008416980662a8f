part = xs[2:5]
head = xs[:3]
tail = xs[1:]
first = xs[0]
