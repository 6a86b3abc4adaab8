from avseld.cli import main

main()
