while True:
    line = input()
    if line == "quit":
        break
