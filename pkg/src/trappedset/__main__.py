from trappedset.cli import main

main()
