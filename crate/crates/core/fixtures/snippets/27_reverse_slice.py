rev = s[::-1]
