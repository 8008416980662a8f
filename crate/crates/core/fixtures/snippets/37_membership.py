if key in seen:
    print(key)
if item not in bag:
    bag.append(item)
