# package initializer
