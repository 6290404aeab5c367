# Tests package initialization file 