if x >= 10 and y <= 3:
    print(x)
while s != "":
    s = s[1:]
