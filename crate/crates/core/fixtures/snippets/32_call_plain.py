setup()
log("ready", level)
