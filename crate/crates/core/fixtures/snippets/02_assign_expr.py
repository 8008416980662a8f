total = price * qty + tax
