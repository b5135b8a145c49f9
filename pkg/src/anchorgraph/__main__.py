from .http_gateway import main

main()
