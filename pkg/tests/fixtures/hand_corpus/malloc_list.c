/* hand corpus: malloc list */
#include <stdio.h>
#include <stdlib.h>

struct node { int v; struct node *next; };

int main(void)
{
    struct node *head = NULL, *p;
    int i, sum = 0;
    for (i = 1; i <= 5; i++) {
        p = malloc(sizeof *p);
        p->v = i * i;
        p->next = head;
        head = p;
    }
    while (head) {
        sum += head->v;
        p = head->next;
        free(head);
        head = p;
    }
    printf("%d\n", sum);
    return 0;
}
