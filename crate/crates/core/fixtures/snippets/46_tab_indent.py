if ready:
	start()
