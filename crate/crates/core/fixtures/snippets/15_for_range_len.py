for j in range(len(arr)):
    arr[j] = arr[j] * 2
