for key, value in table.items():
    print(key, value)
