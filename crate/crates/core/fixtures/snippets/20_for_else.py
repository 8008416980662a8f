for x in xs:
    if x == target:
        break
else:
    print("missing")
